//! Argument parsing and dispatch.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use fmrnn_core::featmap::{ForecastMode, ReadoutKind};
use fmrnn_core::pipeline::Pooling;

use crate::commands::{self, Outcome, SweepAxis, TrainTarget, VerifyOptions};
use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fmrnn", version, about = "Feature-mapping RNN for action anticipation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// dataset manifest
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// flattened, per_channel, vanilla or linear
    #[arg(long, global = true)]
    pub mode: Option<ForecastMode>,
    /// linear or rbf
    #[arg(long, global = true)]
    pub readout: Option<ReadoutKind>,
    /// sub-vector length D
    #[arg(long, global = true)]
    pub feature_step: Option<usize>,
    /// sub-vector stride S
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// LSTM state size H
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    /// RBF kernel count n
    #[arg(long, global = true)]
    pub kernels: Option<usize>,
    /// observed fraction r
    #[arg(long, global = true)]
    pub observe_frac: Option<f64>,
    /// predicted fraction p
    #[arg(long, global = true)]
    pub predict_frac: Option<f64>,
    /// average, max or none
    #[arg(long, global = true)]
    pub pooling: Option<Pooling>,
    #[arg(long, global = true)]
    pub w_l2: Option<f64>,
    #[arg(long, global = true)]
    pub w_adv: Option<f64>,
    /// forecaster epochs
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// forecaster base learning rate
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// forecaster checkpoint
    #[arg(long, global = true)]
    pub forecaster: Option<PathBuf>,
    /// classifier checkpoint
    #[arg(long, global = true)]
    pub classifier: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (manifest + feature files)
    GenSynthetic,
    /// Train the classifier and/or the forecaster
    Train {
        #[arg(long, value_enum, default_value = "both")]
        target: TrainTarget,
    },
    /// Anticipation accuracy on the evaluation split
    Evaluate {
        /// comma-separated predict fractions for an accuracy-vs-p series
        #[arg(long, value_delimiter = ',')]
        p_series: Option<Vec<f64>>,
    },
    /// Retrain and evaluate once per value of one hyperparameter
    Sweep {
        /// D, S, H, n or p
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// run points concurrently on this many threads
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Mean block correlation against feature step size
    CorrAnalysis {
        #[arg(long, value_delimiter = ',')]
        steps: Vec<usize>,
    },
    /// Exact parameter counts next to the closed-form figures
    ParamCount {
        /// feature width for the configured forecaster
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Gradient checks, oracles and the bimodal probe
    Verify {
        /// corrupt this check's backward pass; the report must name it
        #[arg(long)]
        corrupt_gradient: Option<String>,
        #[arg(long)]
        skip_probe: bool,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            data: self.data.clone(),
            mode: self.mode,
            readout: self.readout,
            feature_step: self.feature_step,
            stride: self.stride,
            hidden: self.hidden,
            kernels: self.kernels,
            observe_frac: self.observe_frac,
            predict_frac: self.predict_frac,
            pooling: self.pooling,
            w_l2: self.w_l2,
            w_adv: self.w_adv,
            epochs: self.epochs,
            lr: self.lr,
            forecaster: self.forecaster.clone(),
            classifier: self.classifier.clone(),
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = RunConfig::resolve(cli.common.config.as_deref(), &cli.common.overrides())?;
    let outcome = match cli.command {
        Command::GenSynthetic => commands::gen_synthetic(&cfg)?,
        Command::Train { target } => commands::train(&cfg, target)?,
        Command::Evaluate { p_series } => {
            if let Some(p) = p_series {
                cfg.anticipation.p_series = p;
            }
            commands::evaluate(&cfg)?
        }
        Command::Sweep { axis, values, jobs } => {
            if let Some(a) = axis {
                cfg.sweep.axis = Some(a.parse::<SweepAxis>()?.as_str().to_string());
            }
            if let Some(v) = values {
                cfg.sweep.values = v;
            }
            if let Some(j) = jobs {
                if j == 0 {
                    bail!("--jobs must be at least 1");
                }
                cfg.sweep.jobs = j;
            }
            commands::sweep(&cfg)?
        }
        Command::CorrAnalysis { steps } => commands::corr_analysis(&cfg, &steps)?,
        Command::ParamCount { dim } => commands::param_count(&cfg, dim)?,
        Command::Verify {
            corrupt_gradient,
            skip_probe,
        } => commands::verify(
            &cfg,
            &VerifyOptions {
                corrupt_gradient,
                skip_probe,
            },
        )?,
    };
    Ok(outcome)
}
