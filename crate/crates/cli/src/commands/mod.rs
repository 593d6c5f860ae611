//! One function per subcommand. Each takes a resolved [`RunConfig`],
//! writes its artefacts under `config.out` and returns the metrics record
//! it appended, plus human-readable lines for the terminal.

mod analysis;
mod evaluate;
mod generate;
mod sweep;
mod train;
mod verify;

pub use analysis::{corr_analysis, default_steps, param_count};
pub use evaluate::evaluate;
pub use generate::gen_synthetic;
pub use sweep::{sweep, SweepAxis};
pub use train::{train, TrainTarget};
pub use verify::{verify, VerifyOptions};

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fmrnn_core::featmap::ForecasterModel;
use fmrnn_core::models::ClassifierModel;

use crate::config::RunConfig;
use crate::io::{load_dataset, read_checkpoint, Dataset};
use crate::metrics::MetricsRecord;

pub const FORECASTER_CKPT: &str = "forecaster.ckpt";
pub const CLASSIFIER_CKPT: &str = "classifier.ckpt";
pub const DISCRIMINATOR_CKPT: &str = "discriminator.ckpt";

#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: MetricsRecord,
    pub lines: Vec<String>,
    /// named failed checks; the process exits nonzero when non-empty
    pub failures: Vec<String>,
}

impl Outcome {
    fn new(record: MetricsRecord) -> Self {
        Outcome {
            record,
            lines: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn finish(self, cfg: &RunConfig) -> Result<Self> {
        self.record.emit(&cfg.out)?;
        Ok(self)
    }
}

pub(crate) fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    let Some(path) = &cfg.data.manifest else {
        bail!("no dataset given: pass --data MANIFEST or set [data].manifest");
    };
    Ok(load_dataset(path)?)
}

fn model_path(cfg: &RunConfig, explicit: &Option<PathBuf>, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| cfg.out.join(default))
}

pub(crate) fn load_classifier(cfg: &RunConfig) -> Result<ClassifierModel> {
    let path = model_path(cfg, &cfg.models.classifier, CLASSIFIER_CKPT);
    ensure_exists(&path, "classifier")?;
    let ckpt = read_checkpoint(&path)?;
    ckpt.into_classifier().with_context(|| path.display().to_string())
}

/// `None` only when no path was configured and the default file is absent.
pub(crate) fn load_forecaster(cfg: &RunConfig) -> Result<Option<ForecasterModel>> {
    let path = model_path(cfg, &cfg.models.forecaster, FORECASTER_CKPT);
    if cfg.models.forecaster.is_none() && !path.exists() {
        return Ok(None);
    }
    ensure_exists(&path, "forecaster")?;
    let ckpt = read_checkpoint(&path)?;
    Ok(Some(ckpt.into_forecaster().with_context(|| path.display().to_string())?))
}

fn ensure_exists(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("missing {what} checkpoint {}", path.display());
    }
    Ok(())
}
