use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::numcore::{Grads, ParamId, ParamStore, Rng, Values};
use crate::{Error, Result};

/// Gaussian RBF layer:
/// `out_c = sum_j alpha[j, c] * exp(-||h - mu_j||^2 / sigma_j^2)` with
/// `sigma_j = exp(s_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfLayer {
    kernels: usize,
    input_dim: usize,
    output_dim: usize,
    centers: ParamId,
    log_widths: ParamId,
    coeffs: ParamId,
}

#[derive(Debug, Clone)]
pub struct RbfCache {
    h: Vec<f64>,
    sq_dist: Vec<f64>,
    responses: Vec<f64>,
}

impl RbfCache {
    /// Kernel responses `exp(-||h - mu_j||^2 / sigma_j^2)`.
    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

impl RbfLayer {
    /// Centers ~ N(0, 1), coefficients ~ U(-0.1, 0.1), and
    /// `s = ln(input_dim) / 2` so that `sigma^2 = input_dim`.
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        kernels: usize,
        input_dim: usize,
        output_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if kernels == 0 || input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig("RBF dimensions must be positive".into()));
        }
        let centers = rng.gaussian_vec(kernels * input_dim);
        let s0 = 0.5 * libm::log(input_dim as f64);
        let coeffs = rng.uniform_vec(kernels * output_dim, -0.1, 0.1);
        Ok(RbfLayer {
            kernels,
            input_dim,
            output_dim,
            centers: store.add(&format!("{prefix}.centers"), &[kernels, input_dim], centers)?,
            log_widths: store.add(&format!("{prefix}.log_widths"), &[kernels], vec![s0; kernels])?,
            coeffs: store.add(&format!("{prefix}.coeffs"), &[kernels, output_dim], coeffs)?,
        })
    }

    pub fn bind(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |suffix: &str| {
            let name = format!("{prefix}.{suffix}");
            store.find(&name).ok_or(Error::UnknownParam(name))
        };
        let centers = get("centers")?;
        let log_widths = get("log_widths")?;
        let coeffs = get("coeffs")?;
        let cs = store.shape(centers);
        let ks = store.shape(coeffs);
        if cs.len() != 2 || ks.len() != 2 || cs[0] != ks[0] || store.value(log_widths).len() != cs[0] {
            return Err(Error::MalformedCheckpoint(format!("{prefix} shapes disagree")));
        }
        Ok(RbfLayer {
            kernels: cs[0],
            input_dim: cs[1],
            output_dim: ks[1],
            centers,
            log_widths,
            coeffs,
        })
    }

    pub fn kernels(&self) -> usize {
        self.kernels
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn centers(&self) -> ParamId {
        self.centers
    }

    pub fn log_widths(&self) -> ParamId {
        self.log_widths
    }

    pub fn coeffs(&self) -> ParamId {
        self.coeffs
    }

    pub fn param_count(&self) -> usize {
        self.kernels * (self.input_dim + 1 + self.output_dim)
    }

    pub fn forward(&self, p: &Values, h: &[f64]) -> Result<(Vec<f64>, RbfCache)> {
        if h.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "RBF input",
                expected: self.input_dim,
                actual: h.len(),
            });
        }
        let centers = &p[self.centers];
        let s = &p[self.log_widths];
        let alpha = &p[self.coeffs];
        let m = self.output_dim;
        let mut out = vec![0.0; m];
        let mut sq_dist = Vec::with_capacity(self.kernels);
        let mut responses = Vec::with_capacity(self.kernels);
        for j in 0..self.kernels {
            let mu = &centers[j * self.input_dim..(j + 1) * self.input_dim];
            let d2: f64 = h.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
            let phi = libm::exp(-d2 * libm::exp(-2.0 * s[j]));
            for (o, a) in out.iter_mut().zip(&alpha[j * m..(j + 1) * m]) {
                *o += a * phi;
            }
            sq_dist.push(d2);
            responses.push(phi);
        }
        Ok((
            out,
            RbfCache {
                h: h.to_vec(),
                sq_dist,
                responses,
            },
        ))
    }

    /// Accumulate parameter gradients for upstream `dout` and return `dL/dh`.
    pub fn backward(&self, p: &Values, g: &mut Grads, cache: &RbfCache, dout: &[f64]) -> Vec<f64> {
        let m = self.output_dim;
        let n_in = self.input_dim;
        let alpha = &p[self.coeffs];
        let s = &p[self.log_widths];
        let centers = &p[self.centers];
        let mut dh = vec![0.0; n_in];
        for j in 0..self.kernels {
            let phi = cache.responses[j];
            let arow = &alpha[j * m..(j + 1) * m];
            let mut dphi = 0.0;
            for c in 0..m {
                g[self.coeffs][j * m + c] += phi * dout[c];
                dphi += arow[c] * dout[c];
            }
            if dphi == 0.0 || phi == 0.0 {
                continue;
            }
            let inv_s2 = libm::exp(-2.0 * s[j]);
            // phi = exp(-d2 * inv_s2)
            let dd2 = -dphi * phi * inv_s2;
            g[self.log_widths][j] += dphi * phi * 2.0 * cache.sq_dist[j] * inv_s2;
            let mu = &centers[j * n_in..(j + 1) * n_in];
            let gmu = &mut g[self.centers][j * n_in..(j + 1) * n_in];
            for k in 0..n_in {
                let diff = 2.0 * (cache.h[k] - mu[k]) * dd2;
                dh[k] += diff;
                gmu[k] -= diff;
            }
        }
        dh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::grad_check;

    fn layer(n: usize, h: usize, m: usize, seed: u64) -> (ParamStore, RbfLayer) {
        let mut s = ParamStore::new();
        let l = RbfLayer::new(&mut s, "rbf", n, h, m, &mut Rng::new(seed)).unwrap();
        (s, l)
    }

    #[test]
    fn center_at_input_returns_coefficient() {
        let (mut s, l) = layer(1, 3, 1, 0);
        let h = [0.3, -1.2, 2.0];
        s.value_mut(l.centers).copy_from_slice(&h);
        s.value_mut(l.coeffs)[0] = 2.5;
        let (out, _) = l.forward(s.values(), &h).unwrap();
        assert_eq!(out, vec![2.5]);
    }

    #[test]
    fn unit_distance_unit_width() {
        let (mut s, l) = layer(1, 2, 1, 0);
        s.value_mut(l.centers).copy_from_slice(&[0.0, 0.0]);
        s.value_mut(l.log_widths)[0] = 0.0;
        s.value_mut(l.coeffs)[0] = 1.0;
        let (out, _) = l.forward(s.values(), &[1.0, 0.0]).unwrap();
        assert!((out[0] - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn default_forecaster_readout_shape() {
        let (s, l) = layer(6, 4, 1, 3);
        assert_eq!(l.param_count(), 6 * (4 + 1 + 1));
        assert_eq!(s.scalar_count(), l.param_count());
        assert!(l.forward(s.values(), &[0.1; 4]).is_ok());
        assert!(l.forward(s.values(), &[0.1; 3]).is_err());
    }

    #[test]
    fn alpha_gradient_is_response_vector() {
        let (mut s, l) = layer(5, 3, 1, 9);
        let (_, cache) = l.forward(s.values(), &[0.2, 0.1, -0.4]).unwrap();
        let (p, g) = s.split();
        l.backward(p, g, &cache, &[1.0]);
        assert_eq!(s.grad(l.coeffs), cache.responses());
    }

    #[test]
    fn center_gradient_vanishes_at_input() {
        let (mut s, l) = layer(1, 3, 1, 2);
        let h = [0.5, 0.5, -0.5];
        s.value_mut(l.centers).copy_from_slice(&h);
        let (_, cache) = l.forward(s.values(), &h).unwrap();
        let (p, g) = s.split();
        let dh = l.backward(p, g, &cache, &[1.0]);
        assert!(s.grad(l.centers).iter().all(|&v| v == 0.0));
        assert!(dh.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let mut rng = Rng::new(50 + seed);
            let (mut s, l) = layer(4, 3, 2, seed);
            let h = s.add("h", &[3], rng.gaussian_vec(3)).unwrap();
            let w = rng.gaussian_vec(2);
            let r = grad_check(&mut s, 1e-5, |s| {
                let (out, cache) = l.forward(s.values(), s.value(h))?;
                let loss: f64 = out.iter().zip(&w).map(|(o, w)| o * w).sum();
                let (p, g) = s.split();
                let dh = l.backward(p, g, &cache, &w);
                for (a, b) in g[h].iter_mut().zip(dh) {
                    *a += b;
                }
                Ok(loss)
            })
            .unwrap();
            assert!(r.max_rel_error < 1e-4, "seed {seed}: {r:?}");
        }
    }
}
