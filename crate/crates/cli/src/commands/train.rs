use anyhow::Result;
use fmrnn_core::data::Split;
use fmrnn_core::engine::{train_classifier, train_forecaster, EpochMean};
use fmrnn_core::models::Checkpoint;

use super::{dataset, Outcome, CLASSIFIER_CKPT, DISCRIMINATOR_CKPT, FORECASTER_CKPT};
use crate::config::RunConfig;
use crate::io::write_checkpoint;
use crate::metrics::{append_loss_log, MetricsRecord, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TrainTarget {
    Both,
    Forecaster,
    Classifier,
}

/// Train on the dataset's train split; checkpoints and `loss.jsonl` go to
/// `<out>`.
pub fn train(cfg: &RunConfig, target: TrainTarget) -> Result<Outcome> {
    let data = dataset(cfg)?;
    let train_set = data.split(Split::Train);
    let dim = data.manifest.dim;
    cfg.persist()?;
    let mut out = Outcome::new(MetricsRecord::new("train", cfg));
    let run_id = out.record.run_id.clone();

    if target != TrainTarget::Forecaster {
        let model_cfg = cfg.classifier_config(dim, data.manifest.class_names.len());
        let run = train_classifier(&train_set, &model_cfg, &cfg.classifier_train(dim))?;
        let path = cfg.out.join(CLASSIFIER_CKPT);
        write_checkpoint(&path, &Checkpoint::from_classifier(&run.classifier))?;
        append_loss_log(&cfg.out, &run_id, "classifier", &run.history)?;
        let epochs = run.history.epoch_means();
        let ce = epochs.last().and_then(|e| e.ce).unwrap_or_default();
        out.record.scalar("classifier_ce", ce);
        out.record.series("classifier_ce_vs_epoch", epoch_series("ce", &epochs, |e| e.ce));
        out.say(format!("classifier: final epoch ce {ce:.4}, saved {}", path.display()));
    }

    if target != TrainTarget::Classifier {
        let run = train_forecaster(&train_set, &cfg.forecaster_train(dim))?;
        for w in &run.warnings {
            out.say(format!("warning: {w}"));
            out.record.notes.push(w.clone());
        }
        let path = cfg.out.join(FORECASTER_CKPT);
        write_checkpoint(&path, &Checkpoint::from_forecaster(&run.forecaster))?;
        if let Some(d) = &run.discriminator {
            write_checkpoint(&cfg.out.join(DISCRIMINATOR_CKPT), &Checkpoint::from_discriminator(d))?;
        }
        append_loss_log(&cfg.out, &run_id, "forecaster", &run.history)?;
        let epochs = run.history.epoch_means();
        let last = epochs.last().copied();
        let l2 = last.and_then(|e| e.l2).unwrap_or_default();
        out.record.scalar("forecaster_l2", l2);
        if let Some(adv) = last.and_then(|e| e.adv) {
            out.record.scalar("forecaster_adv", adv);
        }
        let count = run.forecaster.param_count();
        out.record.scalar("forecaster_params", count.total as f64);
        out.record.scalar("forecaster_cell_params", count.cell as f64);
        out.record.series("forecaster_l2_vs_epoch", epoch_series("l2", &epochs, |e| e.l2));
        out.record.series("forecaster_total_vs_epoch", epoch_series("total", &epochs, |e| Some(e.total)));
        out.say(format!(
            "forecaster ({}): final epoch l2 {l2:.5}, {} parameters, saved {}",
            run.forecaster.describe(),
            count.total,
            path.display()
        ));
    }
    out.finish(cfg)
}

fn epoch_series(y: &str, epochs: &[EpochMean], pick: impl Fn(&EpochMean) -> Option<f64>) -> Series {
    let mut s = Series::new("epoch", y);
    for e in epochs {
        if let Some(v) = pick(e) {
            s.push(e.epoch as f64, v);
        }
    }
    s
}
