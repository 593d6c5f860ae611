use alloc::string::ToString;

use super::ParamStore;
use crate::{Error, Result};

/// Plain SGD with a learning rate decayed once per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimState {
    pub base_lr: f64,
    pub decay_rate: f64,
    pub epoch: usize,
}

impl OptimState {
    pub fn new(base_lr: f64, decay_rate: f64) -> Result<Self> {
        if !(base_lr > 0.0 && base_lr.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(decay_rate > 0.0 && decay_rate <= 1.0) {
            return Err(Error::InvalidConfig("decay rate must lie in (0, 1]".into()));
        }
        Ok(OptimState {
            base_lr,
            decay_rate,
            epoch: 0,
        })
    }

    pub fn effective_lr(&self) -> f64 {
        self.base_lr * libm::pow(self.decay_rate, self.epoch as f64)
    }
}

/// `w <- w - lr * grad` for every parameter, then zero the gradients.
///
/// Nothing is updated if any gradient is non-finite.
pub fn sgd_step(store: &mut ParamStore, opt: &OptimState) -> Result<()> {
    for id in store.ids() {
        if store.grad(id).iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(store.name(id).to_string()));
        }
    }
    let lr = opt.effective_lr();
    let ids: alloc::vec::Vec<_> = store.ids().collect();
    for id in ids {
        let grad = store.grad(id).to_vec();
        for (w, g) in store.value_mut(id).iter_mut().zip(grad) {
            *w -= lr * g;
        }
    }
    store.zero_grads();
    Ok(())
}
