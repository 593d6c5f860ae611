use anyhow::Result;
use fmrnn_core::data::synth_generate;

use super::Outcome;
use crate::config::RunConfig;
use crate::io::save_dataset;
use crate::metrics::MetricsRecord;

/// Synthetic dataset: `<out>/manifest.json` plus one feature file per video.
pub fn gen_synthetic(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.synth_spec();
    let videos = synth_generate(&spec)?;
    let splits = spec.split_assignments();
    let classes = if spec.bimodal.is_some() { 2 } else { spec.classes };
    let class_names: Vec<String> = (0..classes).map(|c| format!("class{c}")).collect();
    cfg.persist()?;
    let manifest = save_dataset(&cfg.out, &cfg.data.name, &class_names, &videos, &splits, cfg.data.format)?;

    let mut record = MetricsRecord::new("gen-synthetic", cfg);
    record.scalar("videos", videos.len() as f64);
    record.scalar("classes", classes as f64);
    record.scalar("feature_dim", videos[0].dim() as f64);
    let mut out = Outcome::new(record);
    out.say(format!(
        "wrote {} videos ({} classes, d={}) to {}",
        videos.len(),
        classes,
        videos[0].dim(),
        manifest.display()
    ));
    out.finish(cfg)
}
