use anyhow::Result;
use fmrnn_core::checks::param_count_report;
use fmrnn_core::data::{correlation_matrix, mean_abs_off_diagonal};
use fmrnn_core::featmap::ForecasterModel;
use fmrnn_core::numcore::Rng;

use super::{dataset, Outcome};
use crate::config::RunConfig;
use crate::metrics::{MetricsRecord, Series};

/// Every divisor of `dim` that leaves at least two blocks.
pub fn default_steps(dim: usize) -> Vec<usize> {
    (1..=dim / 2).filter(|s| dim.is_multiple_of(*s)).collect()
}

/// Mean |off-diagonal| block correlation for each step size, over every
/// video in the dataset.
pub fn corr_analysis(cfg: &RunConfig, steps: &[usize]) -> Result<Outcome> {
    let data = dataset(cfg)?;
    let dim = data.manifest.dim;
    let steps = if steps.is_empty() { default_steps(dim) } else { steps.to_vec() };
    cfg.persist()?;
    let mut out = Outcome::new(MetricsRecord::new("corr-analysis", cfg));
    let mut series = Series::new("D", "mean_abs_correlation");
    for step in steps {
        match correlation_matrix(&data.videos, step).and_then(|m| mean_abs_off_diagonal(&m)) {
            Ok(r) => {
                series.push(step as f64, r);
                out.say(format!("D={step}: mean |corr| {r:.4}"));
            }
            Err(e) => {
                let note = format!("skipped D={step}: {e}");
                out.say(note.clone());
                out.record.notes.push(note);
            }
        }
    }
    out.record.series("correlation_vs_step", series);
    out.finish(cfg)
}

/// Exact counts next to the closed-form figures, plus the configured
/// forecaster at width `dim` (the dataset's, when one is configured).
pub fn param_count(cfg: &RunConfig, dim: Option<usize>) -> Result<Outcome> {
    let dim = match (dim, &cfg.data.manifest) {
        (Some(d), _) => d,
        (None, Some(_)) => dataset(cfg)?.manifest.dim,
        (None, None) => 2048,
    };
    let r = param_count_report()?;
    let model = ForecasterModel::new(cfg.forecaster_config(dim), &mut Rng::new(cfg.seed))?;
    let c = model.param_count();
    cfg.persist()?;

    let mut out = Outcome::new(MetricsRecord::new("param-count", cfg));
    let s = &mut out.record;
    s.scalar("shared_cell_d128", r.shared_cell_d128 as f64);
    s.scalar("shared_cell_d2048", r.shared_cell_d2048 as f64);
    s.scalar("shared_formula", r.shared_formula as f64);
    s.scalar("vanilla_cell_d2048_h512", r.vanilla_cell as f64);
    s.scalar("vanilla_formula", r.vanilla_formula as f64);
    s.scalar("vanilla_over_shared", r.ratio());
    s.scalar("configured_cell", c.cell as f64);
    s.scalar("configured_readout", c.readout as f64);
    s.scalar("configured_total", c.total as f64);
    s.scalar("configured_formula", c.quoted_formula as f64);
    out.say(format!("{:<38} {:>12} {:>12}", "", "exact", "formula"));
    out.say(format!("{:<38} {:>12} {:>12}", "scalar LSTM cell, H=4, d=128", r.shared_cell_d128, r.shared_formula));
    out.say(format!("{:<38} {:>12} {:>12}", "scalar LSTM cell, H=4, d=2048", r.shared_cell_d2048, r.shared_formula));
    out.say(format!("{:<38} {:>12} {:>12}", "vanilla LSTM cell, H=512, d=2048", r.vanilla_cell, r.vanilla_formula));
    out.say(format!("vanilla / shared = {:.0}", r.ratio()));
    out.say(format!(
        "configured {} at d={dim}: cell {}, readout {}, total {} (formula {})",
        model.describe(),
        c.cell,
        c.readout,
        c.total,
        c.quoted_formula
    ));
    out.finish(cfg)
}
