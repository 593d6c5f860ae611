//! Anticipation: observe the first part of a video, roll the forecaster
//! forward, classify every frame and pool the per-frame probabilities.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::FeatureSequence;
use crate::featmap::ForecasterModel;
use crate::models::ClassifierModel;
use crate::numcore::argmax;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Average,
    Max,
    /// label of the last frame
    None,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Average => "average",
            Pooling::Max => "max",
            Pooling::None => "none",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "avg" | "mean" => Ok(Pooling::Average),
            "max" => Ok(Pooling::Max),
            "none" => Ok(Pooling::None),
            other => Err(Error::InvalidConfig(alloc::format!("unknown pooling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnticipationConfig {
    /// fraction r of frames observed, in (0, 1]
    pub observe_fraction: f64,
    /// fraction p of frames generated, in [0, 1)
    pub predict_fraction: f64,
    pub pooling: Pooling,
}

impl Default for AnticipationConfig {
    fn default() -> Self {
        AnticipationConfig {
            observe_fraction: 0.5,
            predict_fraction: 0.5,
            pooling: Pooling::Max,
        }
    }
}

impl AnticipationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.observe_fraction > 0.0 && self.observe_fraction <= 1.0) {
            return Err(Error::InvalidConfig("observe fraction must lie in (0, 1]".into()));
        }
        if !(self.predict_fraction >= 0.0 && self.predict_fraction < 1.0) {
            return Err(Error::InvalidConfig("predict fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// `(T_obs, T_gen)` for a video of `frames` frames. The small epsilon
    /// keeps products like `0.29 * 100` from flooring to 28.
    pub fn frame_counts(&self, frames: usize) -> (usize, usize) {
        let t = frames as f64;
        let observed = (libm::floor(self.observe_fraction * t + 1e-9) as usize).clamp(1, frames.max(1));
        let generated = libm::floor(self.predict_fraction * t + 1e-9) as usize;
        (observed, generated)
    }
}

/// Pool per-frame probability rows into one vector and a label.
pub fn pool_predictions<R: AsRef<[f64]>>(rows: &[R], method: Pooling) -> Result<(Vec<f64>, usize)> {
    let first = rows.first().ok_or(Error::Empty("probability rows"))?.as_ref();
    let width = first.len();
    if width == 0 {
        return Err(Error::Empty("probability row"));
    }
    if let Some(r) = rows.iter().find(|r| r.as_ref().len() != width) {
        return Err(Error::DimensionMismatch {
            context: "probability row width",
            expected: width,
            actual: r.as_ref().len(),
        });
    }
    let pooled = match method {
        Pooling::Average => {
            let mut acc = alloc::vec![0.0; width];
            for r in rows {
                for (a, v) in acc.iter_mut().zip(r.as_ref()) {
                    *a += v;
                }
            }
            let n = rows.len() as f64;
            acc.into_iter().map(|a| a / n).collect()
        }
        Pooling::Max => {
            let mut acc = first.to_vec();
            for r in &rows[1..] {
                for (a, v) in acc.iter_mut().zip(r.as_ref()) {
                    *a = a.max(*v);
                }
            }
            acc
        }
        Pooling::None => rows[rows.len() - 1].as_ref().to_vec(),
    };
    let label = argmax(&pooled);
    Ok((pooled, label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOrigin {
    Observed,
    Generated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    pub video_id: String,
    pub true_label: usize,
    pub rows: Vec<Vec<f64>>,
    pub origins: Vec<FrameOrigin>,
    pub pooled: Vec<f64>,
    pub label: usize,
    pub total_frames: usize,
    pub observed_frames: usize,
    pub generated_frames: usize,
}

impl PredictionTrace {
    pub fn correct(&self) -> bool {
        self.label == self.true_label
    }
}

/// Observe `T_obs` frames, generate `T_gen` more, classify all of them and
/// pool. The forecaster is only consulted when `T_gen > 0`.
pub fn anticipate(
    video: &FeatureSequence,
    forecaster: Option<&ForecasterModel>,
    classifier: &ClassifierModel,
    cfg: &AnticipationConfig,
) -> Result<PredictionTrace> {
    cfg.validate()?;
    if video.dim() != classifier.feature_dim() {
        return Err(Error::DimensionMismatch {
            context: "video width vs classifier",
            expected: classifier.feature_dim(),
            actual: video.dim(),
        });
    }
    let (observed, generated) = cfg.frame_counts(video.len());
    let frames = if generated == 0 {
        video.frames.head(observed)
    } else {
        let f = forecaster.ok_or_else(|| Error::InvalidConfig("prediction requested without a forecaster".into()))?;
        f.generate_future(&video.frames.head(observed), generated)?
    };
    let rows = frames
        .iter_rows()
        .map(|r| classifier.classify_frame(r))
        .collect::<Result<Vec<_>>>()?;
    let (pooled, label) = pool_predictions(&rows, cfg.pooling)?;
    let origins = (0..rows.len())
        .map(|i| if i < observed { FrameOrigin::Observed } else { FrameOrigin::Generated })
        .collect();
    Ok(PredictionTrace {
        video_id: video.video_id.clone(),
        true_label: video.label,
        rows,
        origins,
        pooled,
        label,
        total_frames: video.len(),
        observed_frames: observed,
        generated_frames: generated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub traces: Vec<PredictionTrace>,
}

impl Evaluation {
    /// Assemble from traces listed in split order.
    pub fn from_traces(traces: Vec<PredictionTrace>) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::Empty("evaluation split"));
        }
        let correct = traces.iter().filter(|t| t.correct()).count();
        Ok(Evaluation {
            accuracy: correct as f64 / traces.len() as f64,
            traces,
        })
    }
}

/// Sequential accuracy over a split.
pub fn evaluate(
    split: &[FeatureSequence],
    forecaster: Option<&ForecasterModel>,
    classifier: &ClassifierModel,
    cfg: &AnticipationConfig,
) -> Result<Evaluation> {
    let traces = split
        .iter()
        .map(|v| anticipate(v, forecaster, classifier, cfg))
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_traces(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmap::ForecasterConfig;
    use crate::models::ClassifierConfig;
    use crate::numcore::{Matrix, Rng};
    use alloc::vec;

    #[test]
    fn pooling_examples() {
        let (p, l) = pool_predictions(&[[0.6, 0.4], [0.2, 0.8]], Pooling::Average).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15 && (p[1] - 0.6).abs() < 1e-15);
        assert_eq!(l, 1);
        let rows = [[0.95, 0.05], [0.3, 0.7], [0.3, 0.7], [0.3, 0.7]];
        assert_eq!(pool_predictions(&rows, Pooling::Average).unwrap().1, 1);
        let (m, l) = pool_predictions(&rows, Pooling::Max).unwrap();
        assert_eq!((m, l), (vec![0.95, 0.7], 0));
        for method in [Pooling::Average, Pooling::Max, Pooling::None] {
            assert_eq!(pool_predictions(&[[0.1, 0.7, 0.2]], method).unwrap().1, 1);
        }
        assert!(pool_predictions::<[f64; 2]>(&[], Pooling::Max).is_err());
        assert!(pool_predictions(&[vec![0.5, 0.5], vec![1.0]], Pooling::Max).is_err());
    }

    #[test]
    fn frame_count_arithmetic() {
        let c = AnticipationConfig {
            observe_fraction: 0.2,
            predict_fraction: 0.5,
            pooling: Pooling::Max,
        };
        assert_eq!(c.frame_counts(50), (10, 25));
        let tiny = AnticipationConfig { observe_fraction: 0.01, ..c };
        assert_eq!(tiny.frame_counts(10).0, 1);
        let r = AnticipationConfig { observe_fraction: 0.29, predict_fraction: 0.0, ..c };
        assert_eq!(r.frame_counts(100), (29, 0));
    }

    #[test]
    fn pooling_names_round_trip() {
        for p in [Pooling::Average, Pooling::Max, Pooling::None] {
            assert_eq!(p.as_str().parse::<Pooling>().unwrap(), p);
        }
        assert!("median".parse::<Pooling>().is_err());
    }

    fn models(d: usize) -> (ForecasterModel, ClassifierModel) {
        let f = ForecasterModel::new(
            ForecasterConfig {
                feature_dim: d,
                step: 2,
                stride: 2,
                ..ForecasterConfig::default()
            },
            &mut Rng::new(1),
        )
        .unwrap();
        let c = ClassifierModel::new(
            ClassifierConfig {
                feature_dim: d,
                hidden: vec![5],
                kernels: 3,
                classes: 3,
            },
            &mut Rng::new(2),
        )
        .unwrap();
        (f, c)
    }

    fn video(t: usize, d: usize, seed: u64) -> FeatureSequence {
        let mut rng = Rng::new(seed);
        let rows: Vec<Vec<f64>> = (0..t).map(|_| rng.gaussian_vec(d)).collect();
        FeatureSequence::new(alloc::format!("v{seed}"), (seed % 3) as usize, Matrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn generated_rows_come_from_the_forecaster() {
        let (f, c) = models(4);
        let v = video(10, 4, 3);
        let cfg = AnticipationConfig::default();
        let trace = anticipate(&v, Some(&f), &c, &cfg).unwrap();
        assert_eq!((trace.observed_frames, trace.generated_frames, trace.rows.len()), (5, 5, 10));
        let frames = f.generate_future(&v.frames.head(5), 5).unwrap();
        for (t, row) in trace.rows.iter().enumerate() {
            assert_eq!(row, &c.classify_frame(frames.row(t)).unwrap());
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(trace.origins[4], FrameOrigin::Observed);
        assert_eq!(trace.origins[5], FrameOrigin::Generated);
        assert!(anticipate(&v, None, &c, &cfg).is_err());
        assert!(anticipate(&video(10, 6, 3), Some(&f), &c, &cfg).is_err());
    }

    #[test]
    fn one_frame_without_pooling_is_classify_frame() {
        let (_, c) = models(4);
        let v = video(1, 4, 7);
        let cfg = AnticipationConfig {
            observe_fraction: 1.0,
            predict_fraction: 0.0,
            pooling: Pooling::None,
        };
        let trace = anticipate(&v, None, &c, &cfg).unwrap();
        let probs = c.classify_frame(v.frames.row(0)).unwrap();
        assert_eq!(trace.pooled, probs);
        assert_eq!(trace.label, argmax(&probs));
    }

    #[test]
    fn accuracy_is_order_independent() {
        let (f, c) = models(4);
        let split: Vec<_> = (0..9).map(|s| video(6, 4, s)).collect();
        let cfg = AnticipationConfig::default();
        let a = evaluate(&split, Some(&f), &c, &cfg).unwrap();
        let mut rev = split.clone();
        rev.reverse();
        let b = evaluate(&rev, Some(&f), &c, &cfg).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert!(evaluate(&[], Some(&f), &c, &cfg).is_err());
    }
}
