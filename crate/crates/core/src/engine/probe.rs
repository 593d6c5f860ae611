use alloc::vec::Vec;

use super::{train_forecaster, TrainConfig};
use crate::data::{synth_generate, SynthSpec};
use crate::featmap::{ForecastMode, ForecasterConfig, ForecasterModel, ReadoutKind};
use crate::{Error, Result};

/// The two target values used by the shipped probe.
pub const PROBE_MODES: (f64, f64) = (1.0, -1.0);

/// Settings for [`bimodal_gan_probe`]. The forecaster is forced to a
/// one-dimensional flattened model; `train.w_adv` is used for the
/// adversarial run and ignored for the L2-only run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub videos: usize,
    pub train: TrainConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            videos: 256,
            train: TrainConfig {
                w_adv: 10.0,
                base_lr: 0.05,
                epochs: 50,
                batch_forecaster: 32,
                forecaster: ForecasterConfig {
                    mode: ForecastMode::Flattened,
                    feature_dim: 1,
                    step: 1,
                    stride: 1,
                    readout: ReadoutKind::Rbf,
                    ..ForecasterConfig::default()
                },
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub l2_only_distance: f64,
    pub gan_distance: f64,
    pub l2_only_samples: Vec<f64>,
    pub gan_samples: Vec<f64>,
}

/// Train the same minimal generator twice on targets drawn uniformly from
/// `{v1, v2}` with a constant conditioning frame, once with L2 only and
/// once with the adversarial term, and report the mean distance of the
/// generated values to the nearest mode.
pub fn bimodal_gan_probe(v1: f64, v2: f64, config: &ProbeConfig) -> Result<ProbeOutcome> {
    if !(v1.is_finite() && v2.is_finite()) || v1 == v2 {
        return Err(Error::InvalidConfig("bimodal probe needs two distinct finite modes".into()));
    }
    let spec = SynthSpec {
        feature_dim: 1,
        videos_per_class: config.videos,
        seed: config.train.seed,
        bimodal: Some((v1, v2)),
        ..SynthSpec::default()
    };
    let data = synth_generate(&spec)?;
    let mut train = config.train.clone();
    train.forecaster.feature_dim = 1;
    train.forecaster.step = 1;
    train.forecaster.stride = 1;
    train.forecaster.horizon = 1;

    let run = |w_adv: f64| -> Result<Vec<f64>> {
        let cfg = TrainConfig { w_adv, ..train.clone() };
        let model = train_forecaster(&data, &cfg)?.forecaster;
        samples(&model, &data)
    };
    let l2_only_samples = run(0.0)?;
    let gan_samples = run(train.w_adv)?;
    let distance = |s: &[f64]| {
        s.iter().map(|x| (x - v1).abs().min((x - v2).abs())).sum::<f64>() / s.len() as f64
    };
    Ok(ProbeOutcome {
        l2_only_distance: distance(&l2_only_samples),
        gan_distance: distance(&gan_samples),
        l2_only_samples,
        gan_samples,
    })
}

fn samples(model: &ForecasterModel, data: &[crate::data::FeatureSequence]) -> Result<Vec<f64>> {
    data.iter()
        .map(|v| Ok(model.forecast_frame(&v.frames.head(1))?[0]))
        .collect()
}
