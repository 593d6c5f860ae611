use alloc::vec;
use alloc::vec::Vec;

use super::{dataset_dim, FeatureSequence};
use crate::numcore::Matrix;
use crate::{Error, Result};

/// Pearson correlations between the `d / step` contiguous blocks of every
/// frame. Entry `(a, b)` pools the pairs `(x[a*step + j], x[b*step + j])`
/// over all frames and positions `j`. The diagonal is zeroed.
pub fn correlation_matrix(dataset: &[FeatureSequence], step: usize) -> Result<Matrix> {
    let dim = dataset_dim(dataset)?;
    if step == 0 || dim % step != 0 {
        return Err(Error::IndivisiblePlan { dim, step, stride: step });
    }
    let frames: usize = dataset.iter().map(|v| v.len()).sum();
    if frames < 2 {
        return Err(Error::Empty("correlation needs at least two frames"));
    }
    let m = dim / step;
    let n = (frames * step) as f64;

    let mut mean = vec![0.0; m];
    for row in dataset.iter().flat_map(|v| v.frames.iter_rows()) {
        for (a, mu) in mean.iter_mut().enumerate() {
            *mu += row[a * step..(a + 1) * step].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|mu| *mu /= n);

    // centered cross products, upper triangle including the diagonal
    let mut cov = Matrix::zeros(m, m);
    let mut centered = vec![0.0; dim];
    for row in dataset.iter().flat_map(|v| v.frames.iter_rows()) {
        for (j, c) in centered.iter_mut().enumerate() {
            *c = row[j] - mean[j / step];
        }
        for a in 0..m {
            let xa = &centered[a * step..(a + 1) * step];
            for b in a..m {
                let xb = &centered[b * step..(b + 1) * step];
                let s: f64 = xa.iter().zip(xb).map(|(p, q)| p * q).sum();
                cov.set(a, b, cov.get(a, b) + s);
            }
        }
    }

    let mut sd = vec![0.0; m];
    for a in 0..m {
        let var = cov.get(a, a);
        if !(var > 0.0) {
            return Err(Error::ZeroVariance(a));
        }
        sd[a] = libm::sqrt(var);
    }
    let mut out = Matrix::zeros(m, m);
    for a in 0..m {
        for b in a + 1..m {
            let r = (cov.get(a, b) / (sd[a] * sd[b])).clamp(-1.0, 1.0);
            out.set(a, b, r);
            out.set(b, a, r);
        }
    }
    Ok(out)
}

/// Mean absolute value of the off-diagonal entries of a square matrix.
pub fn mean_abs_off_diagonal(m: &Matrix) -> Result<f64> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::DimensionMismatch {
            context: "correlation matrix must be square",
            expected: n,
            actual: m.cols(),
        });
    }
    if n < 2 {
        return Err(Error::Empty("need at least two blocks for off-diagonal entries"));
    }
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                total += m.get(a, b).abs();
            }
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// `(D, mean |off-diagonal correlation|)` for each step size.
pub fn avg_correlation_vs_stepsize(dataset: &[FeatureSequence], steps: &[usize]) -> Result<Vec<(usize, f64)>> {
    steps
        .iter()
        .map(|&s| Ok((s, mean_abs_off_diagonal(&correlation_matrix(dataset, s)?)?)))
        .collect()
}
