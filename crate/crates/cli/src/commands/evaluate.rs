use anyhow::{bail, Result};
use fmrnn_core::data::Split;
use fmrnn_core::pipeline::AnticipationConfig;

use super::{dataset, load_classifier, load_forecaster, Outcome};
use crate::config::RunConfig;
use crate::metrics::{MetricsRecord, Series};
use crate::parallel::evaluate_parallel;

/// Accuracy on the configured split at `(r, p, pooling)`, plus one point per
/// entry of `anticipation.p_series`.
pub fn evaluate(cfg: &RunConfig) -> Result<Outcome> {
    let data = dataset(cfg)?;
    let split: Split = cfg.data.eval_split.parse()?;
    let videos = data.split(split);
    if videos.is_empty() {
        bail!("split `{split}` of {} is empty", data.manifest.name);
    }
    let classifier = load_classifier(cfg)?;
    let forecaster = load_forecaster(cfg)?;
    let base = cfg.anticipation();
    let needs_forecaster = std::iter::once(base.predict_fraction)
        .chain(cfg.anticipation.p_series.iter().copied())
        .any(|p| p > 0.0);
    if needs_forecaster && forecaster.is_none() {
        bail!("missing forecaster checkpoint {}", cfg.out.join(super::FORECASTER_CKPT).display());
    }
    cfg.persist()?;

    let headline = evaluate_parallel(&videos, forecaster.as_ref(), &classifier, &base)?;
    let mut out = Outcome::new(MetricsRecord::new("evaluate", cfg));
    out.record.scalar("accuracy", headline.accuracy);
    out.record.scalar("videos", videos.len() as f64);
    out.say(format!(
        "accuracy {:.4} on {} {split} videos (r={}, p={}, pooling={})",
        headline.accuracy,
        videos.len(),
        base.observe_fraction,
        base.predict_fraction,
        base.pooling
    ));
    if !cfg.anticipation.p_series.is_empty() {
        let mut series = Series::new("p", "accuracy");
        for &p in &cfg.anticipation.p_series {
            let at = AnticipationConfig {
                predict_fraction: p,
                ..base
            };
            let acc = evaluate_parallel(&videos, forecaster.as_ref(), &classifier, &at)?.accuracy;
            series.push(p, acc);
            out.say(format!("  p={p}: accuracy {acc:.4}"));
        }
        out.record.series("accuracy_vs_p", series);
    }
    out.finish(cfg)
}
