use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower clamp applied inside every logarithm of the adversarial losses.
pub const LOG_CLAMP: f64 = 1e-7;

fn clamped_ln(p: f64) -> f64 {
    libm::log(p.clamp(LOG_CLAMP, 1.0))
}

/// Mean over coordinates of squared differences.
pub fn l2_loss(x_true: &[f64], x_pred: &[f64]) -> Result<f64> {
    check_len(x_true, x_pred)?;
    if x_true.is_empty() {
        return Err(Error::Empty("l2_loss input"));
    }
    let sum: f64 = x_true
        .iter()
        .zip(x_pred)
        .map(|(t, p)| (p - t) * (p - t))
        .sum();
    Ok(sum / x_true.len() as f64)
}

/// `dL2/dx_pred = 2 (x_pred - x_true) / len`.
pub fn l2_loss_grad(x_true: &[f64], x_pred: &[f64]) -> Result<Vec<f64>> {
    check_len(x_true, x_pred)?;
    let n = x_true.len() as f64;
    Ok(x_true
        .iter()
        .zip(x_pred)
        .map(|(t, p)| 2.0 * (p - t) / n)
        .collect())
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "l2_loss",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Generator adversarial loss `-ln(clamp(d_out, eps, 1))`.
pub fn gen_adv_loss(d_out: f64) -> f64 {
    -clamped_ln(d_out)
}

/// Derivative of [`gen_adv_loss`] with respect to `d_out` (zero where the
/// clamp is active).
pub fn gen_adv_loss_grad(d_out: f64) -> f64 {
    if d_out > LOG_CLAMP && d_out <= 1.0 {
        -1.0 / d_out
    } else {
        0.0
    }
}

/// Discriminator loss `-ln(d_real) - ln(1 - d_fake)` with both logs clamped.
pub fn disc_loss(d_real: f64, d_fake: f64) -> f64 {
    -clamped_ln(d_real) - clamped_ln(1.0 - d_fake)
}

/// `(dL/dd_real, dL/dd_fake)` for [`disc_loss`].
pub fn disc_loss_grad(d_real: f64, d_fake: f64) -> (f64, f64) {
    let gr = if d_real > LOG_CLAMP && d_real <= 1.0 {
        -1.0 / d_real
    } else {
        0.0
    };
    let q = 1.0 - d_fake;
    let gf = if q > LOG_CLAMP && q <= 1.0 { 1.0 / q } else { 0.0 };
    (gr, gf)
}

/// Weighted generator objective `w_l2 * l2 + w_adv * adv`.
pub fn total_gen_loss(l2: f64, adv: f64, w_l2: f64, w_adv: f64) -> f64 {
    w_l2 * l2 + w_adv * adv
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Returns `(loss, probs)`; the logit gradient is `probs - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|&z| libm::exp(z - max)).sum::<f64>());
    let probs = softmax(logits);
    Ok((lse - logits[label], probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{grad_check, ParamStore, Rng};

    const LN2: f64 = core::f64::consts::LN_2;

    #[test]
    fn l2_values() {
        assert_eq!(l2_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(l2_loss(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert!(l2_loss(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn l2_gradient_matches_finite_differences() {
        let mut rng = Rng::new(4);
        let target = rng.gaussian_vec(5);
        let mut s = ParamStore::new();
        let x = s.add("x", &[5], rng.gaussian_vec(5)).unwrap();
        let r = grad_check(&mut s, 1e-5, |s| {
            let pred = s.value(x).to_vec();
            let g = l2_loss_grad(&target, &pred)?;
            for (a, b) in s.grads_mut()[x].iter_mut().zip(g) {
                *a += b;
            }
            l2_loss(&target, &pred)
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-4);
    }

    #[test]
    fn adversarial_values() {
        assert_eq!(gen_adv_loss(1.0), 0.0);
        assert!((gen_adv_loss(0.5) - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((gen_adv_loss(0.0) - 16.118).abs() < 1e-3);
        assert!(gen_adv_loss(0.0).is_finite());
    }

    #[test]
    fn discriminator_values() {
        assert_eq!(disc_loss(1.0, 0.0), 0.0);
        assert!((disc_loss(0.5, 0.5) - 2.0 * LN2).abs() < 1e-12);
        assert!((disc_loss(0.5, 0.5) - 1.38629).abs() < 1e-5);
        assert!((disc_loss(0.9, 0.1) - 0.21072).abs() < 1e-5);
        assert!(disc_loss(0.0, 1.0).is_finite());
    }

    #[test]
    fn adversarial_gradients_match_finite_differences() {
        for &(r, f) in &[(0.3, 0.6), (0.9, 0.1), (0.55, 0.45)] {
            let h = 1e-6;
            let (gr, gf) = disc_loss_grad(r, f);
            let nr = (disc_loss(r + h, f) - disc_loss(r - h, f)) / (2.0 * h);
            let nf = (disc_loss(r, f + h) - disc_loss(r, f - h)) / (2.0 * h);
            assert!((gr - nr).abs() < 1e-6 && (gf - nf).abs() < 1e-6);
            let na = (gen_adv_loss(f + h) - gen_adv_loss(f - h)) / (2.0 * h);
            assert!((gen_adv_loss_grad(f) - na).abs() < 1e-6);
        }
    }

    #[test]
    fn combined_generator_loss() {
        assert!((total_gen_loss(0.5, 0.7, 10.0, 1.0) - 5.7).abs() < 1e-12);
        assert_eq!(total_gen_loss(0.5, 0.7, 10.0, 0.0), 5.0);
        assert_eq!(total_gen_loss(0.0, 0.0, 10.0, 1.0), 0.0);
    }

    #[test]
    fn uniform_logits() {
        let (loss, probs) = softmax_cross_entropy(&[0.3; 5], 2).unwrap();
        assert!((loss - libm::log(5.0)).abs() < 1e-12);
        assert!(probs.iter().all(|p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn large_logits_are_stable() {
        let (loss, probs) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!((probs[0] - 1.0).abs() < 1e-12 && probs[1] < 1e-300);
        assert!(softmax_cross_entropy(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn cross_entropy_gradient() {
        let mut rng = Rng::new(8);
        let mut s = ParamStore::new();
        let z = s.add("z", &[4], rng.gaussian_vec(4)).unwrap();
        let r = grad_check(&mut s, 1e-5, |s| {
            let (loss, probs) = softmax_cross_entropy(s.value(z), 1)?;
            let mut g = probs;
            g[1] -= 1.0;
            for (a, b) in s.grads_mut()[z].iter_mut().zip(g) {
                *a += b;
            }
            Ok(loss)
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-4);
    }
}
