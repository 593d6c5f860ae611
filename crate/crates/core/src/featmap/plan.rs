use alloc::vec;
use alloc::vec::Vec;

use crate::numcore::Matrix;
use crate::{Error, Result};

/// Layout of length-`step` sub-vectors starting every `stride` coordinates
/// of a `dim`-wide feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationPlan {
    dim: usize,
    step: usize,
    stride: usize,
    offsets: Vec<usize>,
    overlap: Vec<u32>,
}

/// Build the plan for `(d, D, S)`. There is no implicit padding: `d - D`
/// must be a multiple of `S`.
pub fn plan_segments(dim: usize, step: usize, stride: usize) -> Result<SegmentationPlan> {
    if step == 0 || step > dim {
        return Err(Error::InvalidConfig("feature step D must satisfy 1 <= D <= d".into()));
    }
    if stride == 0 || stride > step {
        return Err(Error::InvalidConfig("feature stride S must satisfy 1 <= S <= D".into()));
    }
    if !(dim - step).is_multiple_of(stride) {
        return Err(Error::IndivisiblePlan { dim, step, stride });
    }
    let offsets: Vec<usize> = (0..=(dim - step) / stride).map(|i| i * stride).collect();
    let mut overlap = vec![0u32; dim];
    for &o in &offsets {
        overlap[o..o + step].iter_mut().for_each(|c| *c += 1);
    }
    Ok(SegmentationPlan {
        dim,
        step,
        stride,
        offsets,
        overlap,
    })
}

impl SegmentationPlan {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn segment_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn overlap_counts(&self) -> &[u32] {
        &self.overlap
    }

    /// Sub-vector `i` of `x`.
    pub fn segment<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.offsets[i]..self.offsets[i] + self.step]
    }

    /// Reassemble per-segment predictions; coordinates covered by several
    /// segments get the arithmetic mean of their covering predictions,
    /// summed in segment order and divided by the overlap count. When every
    /// covering prediction is bit-identical that value is returned as is
    /// (`(x + x + x) / 3` is not always `x`).
    pub fn merge<S: AsRef<[f64]>>(&self, segments: &[S]) -> Result<Vec<f64>> {
        if segments.len() != self.offsets.len() {
            return Err(Error::DimensionMismatch {
                context: "segment count",
                expected: self.offsets.len(),
                actual: segments.len(),
            });
        }
        let mut acc = vec![0.0; self.dim];
        let mut first: Vec<Option<f64>> = vec![None; self.dim];
        let mut agree = vec![true; self.dim];
        for (seg, &o) in segments.iter().zip(&self.offsets) {
            let seg = seg.as_ref();
            if seg.len() != self.step {
                return Err(Error::DimensionMismatch {
                    context: "segment width",
                    expected: self.step,
                    actual: seg.len(),
                });
            }
            for (j, &v) in (o..o + self.step).zip(seg) {
                match first[j] {
                    None => first[j] = Some(v),
                    Some(f) if f.to_bits() != v.to_bits() => agree[j] = false,
                    Some(_) => {}
                }
                acc[j] += v;
            }
        }
        for j in 0..self.dim {
            acc[j] = match first[j] {
                Some(f) if agree[j] => f,
                _ => acc[j] / self.overlap[j] as f64,
            };
        }
        Ok(acc)
    }
}

/// Time-major, coordinate-minor serialisation of a `t x D` block:
/// `x_1(1), ..., x_1(D), x_2(1), ...`.
pub fn flatten_scalars(block: &Matrix) -> Vec<f64> {
    block.as_slice().to_vec()
}

pub fn unflatten_scalars(scalars: &[f64], width: usize) -> Result<Matrix> {
    if width == 0 || !scalars.len().is_multiple_of(width) {
        return Err(Error::DimensionMismatch {
            context: "flattened sequence length",
            expected: width,
            actual: scalars.len(),
        });
    }
    Matrix::from_vec(scalars.len() / width, width, scalars.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_layout() {
        let p = plan_segments(2048, 128, 64).unwrap();
        assert_eq!(p.segment_count(), 31);
        assert_eq!(p.offsets()[0], 0);
        assert_eq!(p.offsets()[1], 64);
        assert_eq!(*p.offsets().last().unwrap(), 1920);
    }

    #[test]
    fn non_overlapping_layout() {
        let p = plan_segments(4, 2, 2).unwrap();
        assert_eq!(p.offsets(), &[0, 2]);
        assert!(p.overlap_counts().iter().all(|&c| c == 1));
    }

    #[test]
    fn indivisible_layout_rejected() {
        let err = plan_segments(5, 2, 2).unwrap_err();
        assert_eq!(err, Error::IndivisiblePlan { dim: 5, step: 2, stride: 2 });
        assert!(plan_segments(4, 5, 1).is_err());
        assert!(plan_segments(4, 2, 3).is_err());
        assert!(plan_segments(4, 2, 0).is_err());
    }

    #[test]
    fn overlapping_merge_averages() {
        let p = plan_segments(4, 2, 1).unwrap();
        let (a, b, c, e, f, g) = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0);
        let merged = p.merge(&[[a, b], [c, e], [f, g]]).unwrap();
        assert_eq!(merged, vec![a, (b + c) / 2.0, (e + f) / 2.0, g]);
    }

    #[test]
    fn non_overlapping_merge_concatenates() {
        let p = plan_segments(6, 2, 2).unwrap();
        let merged = p.merge(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]).unwrap();
        assert_eq!(merged, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
    }

    #[test]
    fn flatten_order() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(flatten_scalars(&m), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let one = Matrix::from_rows(&[[7.0, 8.0]]).unwrap();
        assert_eq!(flatten_scalars(&one), vec![7.0, 8.0]);
    }

    fn valid_triple() -> impl Strategy<Value = (usize, usize, usize)> {
        (1usize..=32, 1usize..=12, 0usize..=10).prop_map(|(step, stride_raw, reps)| {
            let stride = 1 + (stride_raw - 1) % step;
            (step + reps * stride, step, stride)
        })
    }

    proptest! {
        #[test]
        fn segment_count_formula((d, step, stride) in valid_triple()) {
            let p = plan_segments(d, step, stride).unwrap();
            prop_assert_eq!(p.segment_count(), (d - step) / stride + 1);
            prop_assert_eq!(p.offsets().last().unwrap() + step, d);
            prop_assert!(p.overlap_counts().iter().all(|&c| c >= 1));
            if stride == step {
                prop_assert!(p.overlap_counts().iter().all(|&c| c == 1));
            }
        }

        #[test]
        fn merging_true_subvectors_is_identity(
            (d, step, stride) in valid_triple(),
            seed in any::<u64>(),
        ) {
            let p = plan_segments(d, step, stride).unwrap();
            let x = crate::numcore::Rng::new(seed).gaussian_vec(d);
            let segs: Vec<&[f64]> = (0..p.segment_count()).map(|i| p.segment(&x, i)).collect();
            prop_assert_eq!(p.merge(&segs).unwrap(), x);
        }

        #[test]
        fn flatten_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let data = crate::numcore::Rng::new(seed).gaussian_vec(rows * cols);
            let m = Matrix::from_vec(rows, cols, data).unwrap();
            prop_assert_eq!(unflatten_scalars(&flatten_scalars(&m), cols).unwrap(), m);
        }
    }
}
