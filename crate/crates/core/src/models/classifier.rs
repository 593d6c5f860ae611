use alloc::vec;
use alloc::vec::Vec;

use crate::layers::{softmax, softmax_cross_entropy, Mlp, RbfLayer};
use crate::numcore::{HasParams, ParamStore, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub feature_dim: usize,
    /// widths after the input layer; the last one feeds the RBF layer
    pub hidden: Vec<usize>,
    pub kernels: usize,
    pub classes: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            feature_dim: 2048,
            hidden: vec![256, 128],
            kernels: 256,
            classes: 21,
        }
    }
}

/// MLP trunk followed by an RBF layer with one coefficient column per
/// class; the RBF outputs are the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    config: ClassifierConfig,
    trunk: Mlp,
    rbf: RbfLayer,
    params: ParamStore,
}

impl HasParams for ClassifierModel {
    fn params(&self) -> &ParamStore {
        &self.params
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }
}

impl ClassifierModel {
    pub fn new(config: ClassifierConfig, rng: &mut Rng) -> Result<Self> {
        if config.hidden.is_empty() {
            return Err(Error::InvalidConfig("classifier needs at least one hidden width".into()));
        }
        if config.classes < 2 {
            return Err(Error::SingleClass);
        }
        let mut widths = vec![config.feature_dim];
        widths.extend_from_slice(&config.hidden);
        let mut params = ParamStore::new();
        let trunk = Mlp::new(&mut params, "trunk", &widths, rng)?;
        let rbf = RbfLayer::new(
            &mut params,
            "rbf",
            config.kernels,
            trunk.output_dim(),
            config.classes,
            rng,
        )?;
        Ok(ClassifierModel {
            config,
            trunk,
            rbf,
            params,
        })
    }

    pub fn from_params(config: ClassifierConfig, params: ParamStore) -> Result<Self> {
        let trunk = Mlp::bind(&params, "trunk")?;
        let rbf = RbfLayer::bind(&params, "rbf")?;
        let mut expect = vec![config.feature_dim];
        expect.extend_from_slice(&config.hidden);
        if trunk.widths() != expect
            || rbf.input_dim() != trunk.output_dim()
            || rbf.kernels() != config.kernels
            || rbf.output_dim() != config.classes
            || params.len() != 2 * trunk.layers().len() + 3
        {
            return Err(Error::MalformedCheckpoint("classifier parameters do not match config".into()));
        }
        Ok(ClassifierModel {
            config,
            trunk,
            rbf,
            params,
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn classes(&self) -> usize {
        self.config.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    pub fn rbf(&self) -> &RbfLayer {
        &self.rbf
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.params.values();
        let (h, _) = self.trunk.forward(p, x)?;
        Ok(self.rbf.forward(p, &h)?.0)
    }

    /// Class probabilities `softmax(rbf(trunk(x)))`.
    pub fn classify_frame(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Cross-entropy of one labelled frame; accumulates `scale * dL/dtheta`.
    pub fn accumulate_loss(&mut self, x: &[f64], label: usize, scale: f64) -> Result<(f64, Vec<f64>)> {
        let (p, g) = self.params.split();
        let (h, trunk_cache) = self.trunk.forward(p, x)?;
        let (logits, rbf_cache) = self.rbf.forward(p, &h)?;
        let (loss, probs) = softmax_cross_entropy(&logits, label)?;
        let mut dz: Vec<f64> = probs.iter().map(|q| q * scale).collect();
        dz[label] -= scale;
        let dh = self.rbf.backward(p, g, &rbf_cache, &dz);
        self.trunk.backward(p, g, &trunk_cache, &dh);
        Ok((loss, probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::grad_check;

    fn small(classes: usize) -> ClassifierModel {
        ClassifierModel::new(
            ClassifierConfig {
                feature_dim: 5,
                hidden: vec![6, 4],
                kernels: 7,
                classes,
            },
            &mut Rng::new(11),
        )
        .unwrap()
    }

    #[test]
    fn zero_trunk_symmetric_coefficients_uniform() {
        let mut m = small(3);
        for l in m.trunk.layers().to_vec() {
            m.params.value_mut(l.weight()).iter_mut().for_each(|v| *v = 0.0);
            m.params.value_mut(l.bias()).iter_mut().for_each(|v| *v = 0.0);
        }
        let c = m.rbf.coeffs();
        m.params.value_mut(c).iter_mut().for_each(|v| *v = 0.3);
        let p = m.classify_frame(&[1.0, -2.0, 0.5, 0.0, 3.0]).unwrap();
        for q in p {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_architecture() {
        let m = ClassifierModel::new(
            ClassifierConfig {
                classes: 4,
                ..ClassifierConfig::default()
            },
            &mut Rng::new(0),
        )
        .unwrap();
        assert_eq!(m.trunk.widths(), vec![2048, 256, 128]);
        assert_eq!(m.rbf.kernels(), 256);
        assert_eq!(m.rbf.input_dim(), 128);
        let p = m.classify_frame(&vec![0.1; 2048]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.classify_frame(&[0.0; 3]).is_err());
    }

    #[test]
    fn rebind_round_trip() {
        let m = small(3);
        let again = ClassifierModel::from_params(m.config.clone(), m.params.clone()).unwrap();
        assert_eq!(again, m);
        let mut wrong = m.config.clone();
        wrong.classes = 4;
        assert!(ClassifierModel::from_params(wrong, m.params.clone()).is_err());
    }

    #[test]
    fn full_backward_pass() {
        for seed in 0..5 {
            let mut m = small(3);
            let mut rng = Rng::new(seed);
            // pull the centres close to typical trunk outputs so kernel
            // responses are not vanishingly small
            let c = m.rbf.centers();
            let v = rng.gaussian_vec(m.params.value(c).len());
            m.params.value_mut(c).iter_mut().zip(v).for_each(|(a, b)| *a = 0.3 * b);
            let x = rng.gaussian_vec(5);
            let label = (seed % 3) as usize;
            let r = grad_check(&mut m, 1e-5, |m| Ok(m.accumulate_loss(&x, label, 1.0)?.0)).unwrap();
            assert!(r.max_rel_error < 1e-4, "seed {seed}: {r:?}");
        }
    }
}
