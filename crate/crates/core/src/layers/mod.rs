//! Differentiable building blocks with hand-derived backward passes.
//!
//! Layers hold [`ParamId`](crate::numcore::ParamId) handles into a
//! [`ParamStore`](crate::numcore::ParamStore) owned by the enclosing model.
//! Forward passes read parameter values, backward passes accumulate into the
//! store's gradient buffers.

mod loss;
mod lstm;
mod mlp;
mod rbf;

pub use loss::{
    disc_loss, disc_loss_grad, gen_adv_loss, gen_adv_loss_grad, l2_loss, l2_loss_grad,
    softmax, softmax_cross_entropy, total_gen_loss, LOG_CLAMP,
};
pub use lstm::{LstmCell, LstmState, LstmStepCache};
pub use mlp::{Dense, Mlp, MlpCache};
pub use rbf::{RbfCache, RbfLayer};

use alloc::vec::Vec;

use crate::numcore::Rng;

/// Glorot-uniform draw for a `fan_out x fan_in` matrix.
pub(crate) fn glorot(rng: &mut Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    rng.uniform_vec(n, -limit, limit)
}
