//! Training loops for the forecaster (L2 or L2 + adversarial) and the
//! frame classifier.

mod classify;
mod forecast;
mod probe;

pub use classify::{train_classifier, ClassifierRun};
pub use forecast::{train_forecaster, training_pairs, ForecasterRun, TrainingPair};
pub use probe::{bimodal_gan_probe, ProbeConfig, ProbeOutcome, PROBE_MODES};

use alloc::vec::Vec;

use crate::featmap::ForecasterConfig;
use crate::numcore::Rng;
use crate::{Error, Result};

/// Stream offsets for the seeded RNG, kept apart so that adding a consumer
/// never perturbs another one.
const STREAM_FORECASTER_INIT: u64 = 0;
const STREAM_DISCRIMINATOR_INIT: u64 = 1;
const STREAM_CLASSIFIER_INIT: u64 = 2;
const STREAM_FORECASTER_BATCHES: u64 = 1 << 32;
const STREAM_CLASSIFIER_BATCHES: u64 = 2 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub w_l2: f64,
    /// 0 disables the discriminator entirely
    pub w_adv: f64,
    pub base_lr: f64,
    /// learning rate multiplier applied once per epoch
    pub decay_rate: f64,
    pub epochs: usize,
    pub batch_forecaster: usize,
    pub batch_classifier: usize,
    /// `None`: one shuffled pass over all samples per epoch. `Some(n)`: `n`
    /// batches drawn uniformly with replacement.
    pub steps_per_epoch: Option<usize>,
    pub seed: u64,
    pub forecaster: ForecasterConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            w_l2: 10.0,
            w_adv: 1.0,
            base_lr: 0.001,
            decay_rate: 0.9,
            epochs: 10,
            batch_forecaster: 128,
            batch_classifier: 256,
            steps_per_epoch: None,
            seed: 0,
            forecaster: ForecasterConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.w_l2) || !ok(self.w_adv) {
            return Err(Error::InvalidConfig("loss weights must be finite and non-negative".into()));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return Err(Error::InvalidConfig("decay rate must lie in (0, 1]".into()));
        }
        if self.epochs == 0 || self.batch_forecaster == 0 || self.batch_classifier == 0 {
            return Err(Error::InvalidConfig("epochs and batch sizes must be at least 1".into()));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::InvalidConfig("steps per epoch must be at least 1".into()));
        }
        Ok(())
    }

    pub fn adversarial(&self) -> bool {
        self.w_adv > 0.0
    }
}

/// Batch-mean losses of one optimisation step. Columns that do not apply to
/// a run are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub l2: Option<f64>,
    pub adv: Option<f64>,
    pub disc: Option<f64>,
    pub ce: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMean {
    pub epoch: usize,
    pub l2: Option<f64>,
    pub adv: Option<f64>,
    pub disc: Option<f64>,
    pub ce: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub steps: Vec<StepRecord>,
}

impl LossHistory {
    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        let finite = [record.l2, record.adv, record.disc, record.ce, Some(record.total)]
            .iter()
            .flatten()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite(alloc::format!("loss at step {}", record.step)));
        }
        self.steps.push(record);
        Ok(())
    }

    pub fn epoch_means(&self) -> Vec<EpochMean> {
        let mut out: Vec<EpochMean> = Vec::new();
        let mut i = 0;
        while i < self.steps.len() {
            let epoch = self.steps[i].epoch;
            let end = i + self.steps[i..].iter().take_while(|r| r.epoch == epoch).count();
            let chunk = &self.steps[i..end];
            let n = chunk.len() as f64;
            let mean = |f: fn(&StepRecord) -> Option<f64>| -> Option<f64> {
                let vals: Vec<f64> = chunk.iter().filter_map(f).collect();
                (vals.len() == chunk.len()).then(|| vals.iter().sum::<f64>() / n)
            };
            out.push(EpochMean {
                epoch,
                l2: mean(|r| r.l2),
                adv: mean(|r| r.adv),
                disc: mean(|r| r.disc),
                ce: mean(|r| r.ce),
                total: chunk.iter().map(|r| r.total).sum::<f64>() / n,
            });
            i = end;
        }
        out
    }
}

/// Sample indices for every batch of one epoch.
fn epoch_batches(samples: usize, batch: usize, steps: Option<usize>, rng: &mut Rng) -> Vec<Vec<usize>> {
    match steps {
        None => {
            let mut order: Vec<usize> = (0..samples).collect();
            rng.shuffle(&mut order);
            order.chunks(batch).map(|c| c.to_vec()).collect()
        }
        Some(n) => (0..n)
            .map(|_| (0..batch).map(|_| rng.index(samples)).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.w_l2, c.w_adv), (10.0, 1.0));
        assert_eq!((c.base_lr, c.decay_rate), (0.001, 0.9));
        assert_eq!((c.batch_forecaster, c.batch_classifier), (128, 256));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        for c in [
            TrainConfig { w_l2: -1.0, ..Default::default() },
            TrainConfig { w_adv: f64::NAN, ..Default::default() },
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_forecaster: 0, ..Default::default() },
            TrainConfig { decay_rate: 1.5, ..Default::default() },
            TrainConfig { steps_per_epoch: Some(0), ..Default::default() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn full_pass_covers_every_sample_once() {
        let b = epoch_batches(10, 4, None, &mut Rng::new(3));
        assert_eq!(b.iter().map(|c| c.len()).collect::<Vec<_>>(), [4, 4, 2]);
        let mut all: Vec<usize> = b.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let s = epoch_batches(10, 4, Some(3), &mut Rng::new(3));
        assert_eq!(s.len(), 3);
        assert!(s.iter().flatten().all(|&i| i < 10));
    }

    #[test]
    fn epoch_means_group_by_epoch() {
        let mut h = LossHistory::default();
        for (epoch, step, v) in [(0, 0, 1.0), (0, 1, 3.0), (1, 2, 5.0)] {
            h.push(StepRecord { epoch, step, l2: Some(v), adv: None, disc: None, ce: None, total: v })
                .unwrap();
        }
        let m = h.epoch_means();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].l2, m[0].adv, m[1].total), (Some(2.0), None, 5.0));
        let bad = StepRecord { epoch: 1, step: 3, l2: Some(f64::INFINITY), adv: None, disc: None, ce: None, total: 0.0 };
        assert!(h.push(bad).is_err());
    }
}
