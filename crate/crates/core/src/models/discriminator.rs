use alloc::vec::Vec;

use crate::layers::{Mlp, MlpCache};
use crate::numcore::{sigmoid, HasParams, ParamStore, Rng};
use crate::{Error, Result};

/// Hidden widths of the discriminator MLP.
pub const DISCRIMINATOR_HIDDEN: [usize; 2] = [64, 32];

/// Judges whether a `D`-dimensional sub-vector is real or generated:
/// MLP `D -> 64 -> 32 -> 1` squashed by the logistic function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorModel {
    mlp: Mlp,
    params: ParamStore,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorCache {
    mlp: MlpCache,
    prob: f64,
}

impl DiscriminatorCache {
    pub fn prob(&self) -> f64 {
        self.prob
    }
}

impl HasParams for DiscriminatorModel {
    fn params(&self) -> &ParamStore {
        &self.params
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }
}

impl DiscriminatorModel {
    pub fn new(input_dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut params = ParamStore::new();
        let widths = [input_dim, DISCRIMINATOR_HIDDEN[0], DISCRIMINATOR_HIDDEN[1], 1];
        let mlp = Mlp::new(&mut params, "disc", &widths, rng)?;
        Ok(DiscriminatorModel { mlp, params })
    }

    pub fn from_params(params: ParamStore) -> Result<Self> {
        let mlp = Mlp::bind(&params, "disc")?;
        let w = mlp.widths();
        if w.len() != 4 || w[1..] != [DISCRIMINATOR_HIDDEN[0], DISCRIMINATOR_HIDDEN[1], 1] {
            return Err(Error::MalformedCheckpoint("discriminator widths".into()));
        }
        Ok(DiscriminatorModel { mlp, params })
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    /// Probability that `x` is real, in the open interval (0, 1) for finite
    /// inputs.
    pub fn discriminate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.prob)
    }

    pub fn forward(&self, x: &[f64]) -> Result<DiscriminatorCache> {
        let (z, mlp) = self.mlp.forward(self.params.values(), x)?;
        Ok(DiscriminatorCache {
            mlp,
            prob: sigmoid(z[0]),
        })
    }

    /// Given `dL/dprob`, accumulate parameter gradients and return `dL/dx`.
    pub fn backward(&mut self, cache: &DiscriminatorCache, dprob: f64) -> Vec<f64> {
        let q = cache.prob;
        let dz = dprob * q * (1.0 - q);
        let (p, g) = self.params.split();
        self.mlp.backward(p, g, &cache.mlp, &[dz])
    }
}
