use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ParamStore;
use crate::{Error, Result};

/// Anything that owns a [`ParamStore`].
pub trait HasParams {
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
}

impl HasParams for ParamStore {
    fn params(&self) -> &ParamStore {
        self
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        self
    }
}

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    /// loss at the unperturbed point
    pub loss: f64,
    /// smallest non-zero analytic gradient magnitude
    pub min_abs_grad: f64,
}

impl GradCheck {
    /// Round-off in the central difference is about `eps_mach * |loss| / eps`.
    /// A point is well conditioned when every non-zero analytic coordinate
    /// is at least `1e4` times that, so a relative error of `1e-4` is
    /// resolvable at all.
    pub fn well_conditioned(&self, eps: f64) -> bool {
        self.min_abs_grad >= 1e4 * f64::EPSILON * self.loss.abs().max(1.0) / eps
    }
}

/// Compare analytic gradients against central differences.
///
/// `f` must return the loss and *accumulate* its analytic gradient into the
/// store's gradient buffers. The relative error of one coordinate is
/// `|a - n| / max(1e-12, |a| + |n|)`; the maximum over every coordinate of
/// every parameter is returned. Parameter values are restored afterwards and
/// gradients are left zeroed.
pub fn grad_check<M, F>(model: &mut M, eps: f64, mut f: F) -> Result<GradCheck>
where
    M: HasParams,
    F: FnMut(&mut M) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("grad_check eps must be positive".into()));
    }
    model.params_mut().zero_grads();
    let base = f(model)?;
    if !base.is_finite() {
        return Err(Error::NonFinite("loss at base point".into()));
    }
    let ids: Vec<_> = model.params().ids().collect();
    let analytic: Vec<Vec<f64>> = ids.iter().map(|&id| model.params().grad(id).to_vec()).collect();

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        loss: base,
        min_abs_grad: analytic
            .iter()
            .flatten()
            .map(|g| g.abs())
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min),
    };
    for (pi, &id) in ids.iter().enumerate() {
        for k in 0..analytic[pi].len() {
            let orig = model.params().value(id)[k];
            model.params_mut().value_mut(id)[k] = orig + eps;
            let plus = f(model)?;
            model.params_mut().value_mut(id)[k] = orig - eps;
            let minus = f(model)?;
            model.params_mut().value_mut(id)[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss while perturbing {}[{k}]",
                    model.params().name(id)
                )));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[pi][k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            if rel > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = rel;
                report.worst_param = model.params().name(id).into();
                report.worst_index = k;
            }
        }
    }
    model.params_mut().zero_grads();
    Ok(report)
}

/// Worst result over several random points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub worst: GradCheck,
    pub points: usize,
    /// draws rejected as not [`well_conditioned`](GradCheck::well_conditioned)
    pub skipped: usize,
}

/// Run `check(draw)` for draws `0, 1, 2, ...` until `wanted` well-conditioned
/// points have been checked, giving up after `max_draws`.
pub fn check_points<F>(wanted: usize, max_draws: usize, eps: f64, mut check: F) -> Result<PointSummary>
where
    F: FnMut(u64) -> Result<GradCheck>,
{
    let mut worst: Option<GradCheck> = None;
    let mut points = 0;
    let mut skipped = 0;
    for draw in 0..max_draws as u64 {
        if points == wanted {
            break;
        }
        let r = check(draw)?;
        if !r.well_conditioned(eps) {
            skipped += 1;
            continue;
        }
        points += 1;
        if worst.as_ref().is_none_or(|w| r.max_rel_error > w.max_rel_error) {
            worst = Some(r);
        }
    }
    match worst {
        Some(worst) if points == wanted => Ok(PointSummary { worst, points, skipped }),
        _ => Err(Error::InvalidConfig(format!(
            "only {points} of {wanted} gradient-check points were well conditioned"
        ))),
    }
}
