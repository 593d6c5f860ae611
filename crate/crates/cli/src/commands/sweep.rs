use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use fmrnn_core::data::{FeatureSequence, Split};
use fmrnn_core::engine::{train_classifier, train_forecaster};
use fmrnn_core::featmap::ForecasterModel;
use fmrnn_core::models::ClassifierModel;
use fmrnn_core::numcore::Rng;
use rayon::prelude::*;

use super::{dataset, load_classifier, Outcome};
use crate::config::RunConfig;
use crate::metrics::{MetricsRecord, Series};
use crate::parallel::evaluate_parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// feature step D
    Step,
    /// feature stride S
    Stride,
    /// LSTM state size H
    Hidden,
    /// RBF kernel count n
    Kernels,
    /// prediction fraction p
    Predict,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Step => "D",
            SweepAxis::Stride => "S",
            SweepAxis::Hidden => "H",
            SweepAxis::Kernels => "n",
            SweepAxis::Predict => "p",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "D" | "step" | "feature-step" => SweepAxis::Step,
            "S" | "stride" => SweepAxis::Stride,
            "H" | "hidden" => SweepAxis::Hidden,
            "n" | "kernels" => SweepAxis::Kernels,
            "p" | "predict" => SweepAxis::Predict,
            other => bail!("unknown sweep axis `{other}` (expected D, S, H, n or p)"),
        })
    }
}

enum Point {
    Done { value: f64, accuracy: f64, l2: Option<f64> },
    Skipped { value: f64, reason: String },
}

/// Retrain the forecaster for every axis value (once in total for `p`) and
/// evaluate it; the classifier is trained once, or loaded when a checkpoint
/// is configured. Invalid values are skipped and reported.
pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let axis: SweepAxis = cfg
        .sweep
        .axis
        .as_deref()
        .ok_or_else(|| anyhow!("no sweep axis: pass --axis or set [sweep].axis"))?
        .parse()?;
    if cfg.sweep.values.is_empty() {
        bail!("no sweep values: pass --values or set [sweep].values");
    }
    let data = dataset(cfg)?;
    let train_set = data.split(Split::Train);
    let eval_split: Split = cfg.data.eval_split.parse()?;
    let eval_set = data.split(eval_split);
    if eval_set.is_empty() {
        bail!("split `{eval_split}` of {} is empty", data.manifest.name);
    }
    let dim = data.manifest.dim;
    cfg.persist()?;

    let classifier = match cfg.models.classifier {
        Some(_) => load_classifier(cfg)?,
        None => {
            let model_cfg = cfg.classifier_config(dim, data.manifest.class_names.len());
            train_classifier(&train_set, &model_cfg, &cfg.classifier_train(dim))?.classifier
        }
    };

    let ctx = Ctx {
        cfg,
        axis,
        dim,
        train_set: &train_set,
        eval_set: &eval_set,
        classifier: &classifier,
    };
    let points: Vec<Point> = if axis == SweepAxis::Predict {
        ctx.predict_points()?
    } else if cfg.sweep.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.sweep.jobs).build()?;
        pool.install(|| cfg.sweep.values.par_iter().map(|&v| ctx.point(v)).collect::<Result<Vec<_>>>())?
    } else {
        cfg.sweep.values.iter().map(|&v| ctx.point(v)).collect::<Result<Vec<_>>>()?
    };

    let mut out = Outcome::new(MetricsRecord::new("sweep", cfg));
    let mut acc = Series::new(axis.as_str(), "accuracy");
    let mut l2 = Series::new(axis.as_str(), "l2");
    for p in points {
        match p {
            Point::Done { value, accuracy, l2: loss } => {
                acc.push(value, accuracy);
                if let Some(loss) = loss {
                    l2.push(value, loss);
                }
                out.say(format!("{axis}={value}: accuracy {accuracy:.4}"));
            }
            Point::Skipped { value, reason } => {
                let note = format!("skipped {axis}={value}: {reason}");
                out.say(note.clone());
                out.record.notes.push(note);
            }
        }
    }
    out.record.scalar("points", acc.points.len() as f64);
    out.record.scalar("skipped", out.record.notes.len() as f64);
    out.record.series(&format!("sweep_{axis}"), acc);
    if !l2.points.is_empty() {
        out.record.series(&format!("sweep_{axis}_l2"), l2);
    }
    out.finish(cfg)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    axis: SweepAxis,
    dim: usize,
    train_set: &'a [FeatureSequence],
    eval_set: &'a [FeatureSequence],
    classifier: &'a ClassifierModel,
}

impl Ctx<'_> {
    fn point(&self, value: f64) -> Result<Point> {
        let mut cfg = self.cfg.clone();
        let skip = |reason: String| Ok(Point::Skipped { value, reason });
        if !(value >= 1.0 && value.fract() == 0.0) {
            return skip("not a positive integer".into());
        }
        let v = value as usize;
        match self.axis {
            SweepAxis::Step => cfg.forecaster.feature_step = v,
            SweepAxis::Stride => cfg.forecaster.stride = v,
            SweepAxis::Hidden => cfg.forecaster.hidden = v,
            SweepAxis::Kernels => cfg.forecaster.kernels = v,
            SweepAxis::Predict => unreachable!(),
        }
        if let Err(e) = ForecasterModel::new(cfg.forecaster_config(self.dim), &mut Rng::new(0)) {
            return skip(e.to_string());
        }
        let run = train_forecaster(self.train_set, &cfg.forecaster_train(self.dim))?;
        let accuracy = evaluate_parallel(self.eval_set, Some(&run.forecaster), self.classifier, &cfg.anticipation())?.accuracy;
        let l2 = run.history.epoch_means().last().and_then(|e| e.l2);
        Ok(Point::Done { value, accuracy, l2 })
    }

    /// `p` only changes inference, so one forecaster serves every point.
    fn predict_points(&self) -> Result<Vec<Point>> {
        let run = train_forecaster(self.train_set, &self.cfg.forecaster_train(self.dim))?;
        let base = self.cfg.anticipation();
        self.cfg
            .sweep
            .values
            .iter()
            .map(|&p| {
                let mut at = base;
                at.predict_fraction = p;
                if let Err(e) = at.validate() {
                    return Ok(Point::Skipped {
                        value: p,
                        reason: e.to_string(),
                    });
                }
                let accuracy = evaluate_parallel(self.eval_set, Some(&run.forecaster), self.classifier, &at)?.accuracy;
                Ok(Point::Done { value: p, accuracy, l2: None })
            })
            .collect()
    }
}
