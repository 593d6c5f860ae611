use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{FeatureSequence, Split};
use crate::numcore::{Matrix, Rng};
use crate::{Error, Result};

/// Recipe for a desk-scale synthetic feature dataset.
///
/// Every video follows a latent state with one scalar per block of `block`
/// coordinates. The latent starts near the origin independently of the
/// class and relaxes towards a class-specific target under a diagonal
/// per-class transition matrix, so the class signal strengthens over time.
/// Each coordinate is an affine copy (gain, bias) of its block latent plus
/// observation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub feature_dim: usize,
    pub frames: usize,
    pub videos_per_class: usize,
    pub block: usize,
    /// diagonal of every transition matrix before jitter; spectral radius
    pub decay: f64,
    /// per-class, per-block uniform jitter applied to `decay`
    pub decay_spread: f64,
    /// minimum pairwise Euclidean distance between latent class targets
    pub separation: f64,
    pub init_scale: f64,
    pub latent_noise: f64,
    /// correlation between neighbouring blocks of latent innovations and of
    /// class targets
    pub block_correlation: f64,
    pub noise: f64,
    /// per-coordinate gains are drawn from `U[1 - gain_spread, 1 + gain_spread]`
    pub gain_spread: f64,
    /// per-coordinate biases are drawn from `U(-bias_scale, bias_scale)`
    pub bias_scale: f64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
    /// Replace the dynamics by a two-frame probe: frame 0 is all ones,
    /// frame 1 is all `v1` or all `v2` with equal probability.
    pub bimodal: Option<(f64, f64)>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: 4,
            feature_dim: 64,
            frames: 30,
            videos_per_class: 50,
            block: 8,
            decay: 0.9,
            decay_spread: 0.0,
            separation: 2.0,
            init_scale: 0.3,
            latent_noise: 0.05,
            block_correlation: 0.6,
            noise: 0.3,
            gain_spread: 0.5,
            bias_scale: 0.5,
            test_fraction: 0.5,
            val_fraction: 0.0,
            seed: 0,
            bimodal: None,
        }
    }
}

/// Ground-truth generator parameters derived from a [`SynthSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDynamics {
    /// per-class `M x M` transition matrices (diagonal), `M = d / block`
    pub transitions: Vec<Matrix>,
    /// per-class latent fixed points
    pub targets: Vec<Vec<f64>>,
    /// per-class offsets `(I - A_c) m_c`
    pub offsets: Vec<Vec<f64>>,
    pub gains: Vec<f64>,
    pub biases: Vec<f64>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic spec: {m}")));
        if self.feature_dim == 0 || self.frames == 0 || self.videos_per_class == 0 {
            return bad("dimensions and counts must be positive");
        }
        if self.bimodal.is_some() {
            return Ok(());
        }
        if self.classes < 1 {
            return bad("need at least one class");
        }
        if self.block == 0 || !self.feature_dim.is_multiple_of(self.block) {
            return bad("block size must divide the feature dimension");
        }
        if !(self.decay - self.decay_spread >= 0.0 && self.decay + self.decay_spread <= 1.0) {
            return bad("transition spectral radius must stay within [0, 1]");
        }
        if !(-1.0..=1.0).contains(&self.block_correlation) {
            return bad("block correlation must lie in [-1, 1]");
        }
        if self.noise < 0.0
            || self.latent_noise < 0.0
            || self.init_scale < 0.0
            || self.separation < 0.0
            || self.bias_scale < 0.0
            || !(0.0..1.0).contains(&self.gain_spread)
        {
            return bad("scales must be non-negative");
        }
        if !(self.test_fraction >= 0.0 && self.val_fraction >= 0.0 && self.test_fraction + self.val_fraction <= 1.0) {
            return bad("split fractions must be non-negative and sum to at most 1");
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.feature_dim / self.block.max(1)
    }

    /// Number of videos in the generated dataset.
    pub fn video_count(&self) -> usize {
        match self.bimodal {
            Some(_) => self.videos_per_class,
            None => self.classes * self.videos_per_class,
        }
    }

    /// Split of the `i`-th video of a class: the first videos of every class
    /// go to train, then val, then test.
    pub fn split_of(&self, index_in_class: usize) -> Split {
        let n = self.videos_per_class as f64;
        let n_test = libm::floor(n * self.test_fraction + 1e-9) as usize;
        let n_val = libm::floor(n * self.val_fraction + 1e-9) as usize;
        let n_train = self.videos_per_class.saturating_sub(n_test + n_val);
        if index_in_class < n_train {
            Split::Train
        } else if index_in_class < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        }
    }

    /// Split assignment for every video, aligned with [`synth_generate`]'s
    /// output order.
    pub fn split_assignments(&self) -> Vec<Split> {
        (0..self.video_count())
            .map(|i| self.split_of(i % self.videos_per_class))
            .collect()
    }

    pub fn dynamics(&self) -> Result<SynthDynamics> {
        self.validate()?;
        let m = self.blocks();
        let mut rng = Rng::stream(self.seed, 0);
        let mut transitions = Vec::with_capacity(self.classes);
        let mut targets = Vec::with_capacity(self.classes);
        for _ in 0..self.classes {
            let mut a = Matrix::zeros(m, m);
            for b in 0..m {
                let jitter = if self.decay_spread > 0.0 {
                    rng.uniform(-self.decay_spread, self.decay_spread)
                } else {
                    0.0
                };
                a.set(b, b, self.decay + jitter);
            }
            transitions.push(a);
            targets.push(correlated_normal(&mut rng, m, self.block_correlation));
        }
        // rescale so the closest pair of targets sits exactly `separation` apart
        let mut min_dist = f64::INFINITY;
        for i in 0..targets.len() {
            for j in i + 1..targets.len() {
                let d2: f64 = targets[i].iter().zip(&targets[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                min_dist = min_dist.min(libm::sqrt(d2));
            }
        }
        if min_dist.is_finite() && min_dist > 0.0 {
            let s = self.separation / min_dist;
            for t in &mut targets {
                t.iter_mut().for_each(|v| *v *= s);
            }
        }
        let offsets = transitions
            .iter()
            .zip(&targets)
            .map(|(a, t)| (0..m).map(|b| (1.0 - a.get(b, b)) * t[b]).collect())
            .collect();
        let gains = spread(&mut rng, self.feature_dim, 1.0, self.gain_spread);
        let biases = spread(&mut rng, self.feature_dim, 0.0, self.bias_scale);
        Ok(SynthDynamics {
            transitions,
            targets,
            offsets,
            gains,
            biases,
        })
    }
}

fn spread(rng: &mut Rng, n: usize, centre: f64, half_width: f64) -> Vec<f64> {
    if half_width > 0.0 {
        rng.uniform_vec(n, centre - half_width, centre + half_width)
    } else {
        vec![centre; n]
    }
}

/// Standard-normal vector whose neighbouring entries have correlation `rho`.
fn correlated_normal(rng: &mut Rng, n: usize, rho: f64) -> Vec<f64> {
    let scale = libm::sqrt(1.0 - rho * rho);
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n {
        let e = rng.gaussian();
        prev = if i == 0 { e } else { rho * prev + scale * e };
        out.push(prev);
    }
    out
}

/// Generate the dataset described by `spec`. Videos are ordered by class,
/// then by index within the class; identical specs give identical data.
pub fn synth_generate(spec: &SynthSpec) -> Result<Vec<FeatureSequence>> {
    spec.validate()?;
    if let Some((v1, v2)) = spec.bimodal {
        return bimodal(spec, v1, v2);
    }
    let dyn_ = spec.dynamics()?;
    let m = spec.blocks();
    let mut rng = Rng::stream(spec.seed, 1);
    let mut videos = Vec::with_capacity(spec.video_count());
    for class in 0..spec.classes {
        let a = &dyn_.transitions[class];
        let b = &dyn_.offsets[class];
        for v in 0..spec.videos_per_class {
            let mut z: Vec<f64> = rng.gaussian_vec(m).into_iter().map(|e| e * spec.init_scale).collect();
            let mut frames = Matrix::zeros(0, spec.feature_dim);
            for t in 0..spec.frames {
                if t > 0 {
                    let eps = correlated_normal(&mut rng, m, spec.block_correlation);
                    let mut next = b.clone();
                    for (i, n) in next.iter_mut().enumerate() {
                        for (j, zj) in z.iter().enumerate() {
                            *n += a.get(i, j) * zj;
                        }
                        *n += spec.latent_noise * eps[i];
                    }
                    z = next;
                }
                let row: Vec<f64> = (0..spec.feature_dim)
                    .map(|j| {
                        let clean = dyn_.gains[j] * z[j / spec.block] + dyn_.biases[j];
                        if spec.noise > 0.0 {
                            clean + spec.noise * rng.gaussian()
                        } else {
                            clean
                        }
                    })
                    .collect();
                frames.push_row(&row)?;
            }
            videos.push(FeatureSequence::new(format!("c{class}_v{v:03}"), class, frames)?);
        }
    }
    Ok(videos)
}

fn bimodal(spec: &SynthSpec, v1: f64, v2: f64) -> Result<Vec<FeatureSequence>> {
    let mut rng = Rng::stream(spec.seed, 2);
    (0..spec.videos_per_class)
        .map(|i| {
            let second = rng.bernoulli(0.5);
            let value = if second { v2 } else { v1 };
            let frames = Matrix::from_rows(&[vec![1.0; spec.feature_dim], vec![value; spec.feature_dim]])?;
            FeatureSequence::new(format!("bimodal_{i:04}"), second as usize, frames)
        })
        .collect()
}
