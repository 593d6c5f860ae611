//! Dense arithmetic, seeded randomness, the parameter store, SGD and the
//! finite-difference gradient checker.

mod gradcheck;
mod matrix;
mod optim;
mod params;
mod rng;

pub use gradcheck::{check_points, grad_check, GradCheck, HasParams, PointSummary};
pub use matrix::Matrix;
pub use optim::{sgd_step, OptimState};
pub use params::{Grads, ParamId, ParamStore, Values};
pub use rng::Rng;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += m * x` for a row-major `rows x cols` matrix.
pub fn gemv_acc(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o += dot(&m[r * cols..(r + 1) * cols], x);
    }
}

/// `out += m^T * y` for a row-major `rows x cols` matrix.
pub fn gemv_t_acc(m: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    for r in 0..rows {
        let yr = y[r];
        if yr == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(&m[r * cols..(r + 1) * cols]) {
            *o += w * yr;
        }
    }
}

/// `m += y x^T`.
pub fn outer_acc(m: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        for (w, xv) in m[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *w += yr * xv;
        }
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
