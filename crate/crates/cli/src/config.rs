//! Run configuration: a TOML file, overridden by command-line flags, fully
//! resolved before anything runs and persisted next to the outputs.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use fmrnn_core::data::SynthSpec;
use fmrnn_core::engine::TrainConfig;
use fmrnn_core::featmap::{ForecastMode, ForecasterConfig, ReadoutKind};
use fmrnn_core::models::ClassifierConfig;
use fmrnn_core::pipeline::{AnticipationConfig, Pooling};
use serde::{Deserialize, Serialize};

use crate::io::FeatureFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataSection,
    pub synth: SynthSection,
    pub forecaster: ForecasterSection,
    pub train: TrainSection,
    pub classifier: ClassifierSection,
    pub anticipation: AnticipationSection,
    pub sweep: SweepSection,
    pub models: ModelPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// dataset manifest read by train / evaluate / sweep / corr-analysis
    pub manifest: Option<PathBuf>,
    pub name: String,
    pub format: FeatureFormat,
    /// split used by evaluate and sweep
    pub eval_split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub classes: usize,
    pub feature_dim: usize,
    pub frames: usize,
    pub videos_per_class: usize,
    pub block: usize,
    pub decay: f64,
    pub decay_spread: f64,
    pub separation: f64,
    pub init_scale: f64,
    pub latent_noise: f64,
    pub block_correlation: f64,
    pub noise: f64,
    pub gain_spread: f64,
    pub bias_scale: f64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub bimodal: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterSection {
    #[serde(with = "text")]
    pub mode: ForecastMode,
    #[serde(with = "text")]
    pub readout: ReadoutKind,
    pub feature_step: usize,
    pub stride: usize,
    pub hidden: usize,
    pub kernels: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub w_l2: f64,
    pub w_adv: f64,
    pub lr: f64,
    pub decay: f64,
    pub epochs: usize,
    pub batch: usize,
    pub steps_per_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub hidden: Vec<usize>,
    pub kernels: usize,
    pub lr: f64,
    pub decay: f64,
    pub epochs: usize,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnticipationSection {
    pub observe_frac: f64,
    pub predict_frac: f64,
    #[serde(with = "text")]
    pub pooling: Pooling,
    /// extra predict fractions evaluated by `evaluate`
    pub p_series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub values: Vec<f64>,
    /// sweep points run concurrently when > 1
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    pub forecaster: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataSection::default(),
            synth: SynthSection::default(),
            forecaster: ForecasterSection::default(),
            train: TrainSection::default(),
            classifier: ClassifierSection::default(),
            anticipation: AnticipationSection::default(),
            sweep: SweepSection::default(),
            models: ModelPaths::default(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            manifest: None,
            name: "synthetic".into(),
            format: FeatureFormat::Binary,
            eval_split: "test".into(),
        }
    }
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthSpec::default();
        SynthSection {
            classes: s.classes,
            feature_dim: s.feature_dim,
            frames: s.frames,
            videos_per_class: s.videos_per_class,
            block: s.block,
            decay: s.decay,
            decay_spread: s.decay_spread,
            separation: s.separation,
            init_scale: s.init_scale,
            latent_noise: s.latent_noise,
            block_correlation: s.block_correlation,
            noise: s.noise,
            gain_spread: s.gain_spread,
            bias_scale: s.bias_scale,
            test_fraction: s.test_fraction,
            val_fraction: s.val_fraction,
            bimodal: None,
        }
    }
}

impl Default for ForecasterSection {
    fn default() -> Self {
        let f = ForecasterConfig::default();
        ForecasterSection {
            mode: f.mode,
            readout: f.readout,
            feature_step: f.step,
            stride: f.stride,
            hidden: f.hidden,
            kernels: f.kernels,
            horizon: f.horizon,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            w_l2: t.w_l2,
            w_adv: t.w_adv,
            lr: t.base_lr,
            decay: t.decay_rate,
            epochs: t.epochs,
            batch: t.batch_forecaster,
            steps_per_epoch: t.steps_per_epoch,
        }
    }
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        let t = TrainConfig::default();
        ClassifierSection {
            hidden: c.hidden,
            kernels: c.kernels,
            lr: t.base_lr,
            decay: t.decay_rate,
            epochs: t.epochs,
            batch: t.batch_classifier,
        }
    }
}

impl Default for AnticipationSection {
    fn default() -> Self {
        let a = AnticipationConfig::default();
        AnticipationSection {
            observe_frac: a.observe_fraction,
            predict_frac: a.predict_fraction,
            pooling: a.pooling,
            p_series: Vec::new(),
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: None,
            values: Vec::new(),
            jobs: 1,
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub mode: Option<ForecastMode>,
    pub readout: Option<ReadoutKind>,
    pub feature_step: Option<usize>,
    pub stride: Option<usize>,
    pub hidden: Option<usize>,
    pub kernels: Option<usize>,
    pub observe_frac: Option<f64>,
    pub predict_frac: Option<f64>,
    pub pooling: Option<Pooling>,
    pub w_l2: Option<f64>,
    pub w_adv: Option<f64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub forecaster: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        // toml's messages span several lines; keep diagnostics on one
        toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.message().trim()))
    }

    /// File (if any), then flags.
    pub fn resolve(path: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(flags);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.seed, &o.seed);
        set(&mut self.out, &o.out);
        if o.data.is_some() {
            self.data.manifest = o.data.clone();
        }
        set(&mut self.forecaster.mode, &o.mode);
        set(&mut self.forecaster.readout, &o.readout);
        set(&mut self.forecaster.feature_step, &o.feature_step);
        set(&mut self.forecaster.stride, &o.stride);
        set(&mut self.forecaster.hidden, &o.hidden);
        set(&mut self.forecaster.kernels, &o.kernels);
        set(&mut self.anticipation.observe_frac, &o.observe_frac);
        set(&mut self.anticipation.predict_frac, &o.predict_frac);
        set(&mut self.anticipation.pooling, &o.pooling);
        set(&mut self.train.w_l2, &o.w_l2);
        set(&mut self.train.w_adv, &o.w_adv);
        set(&mut self.train.epochs, &o.epochs);
        set(&mut self.train.lr, &o.lr);
        if o.forecaster.is_some() {
            self.models.forecaster = o.forecaster.clone();
        }
        if o.classifier.is_some() {
            self.models.classifier = o.classifier.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serialises")
    }

    /// Write the resolved config to `<out>/config.toml`.
    pub fn persist(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join("config.toml");
        fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let s = &self.synth;
        SynthSpec {
            classes: s.classes,
            feature_dim: s.feature_dim,
            frames: s.frames,
            videos_per_class: s.videos_per_class,
            block: s.block,
            decay: s.decay,
            decay_spread: s.decay_spread,
            separation: s.separation,
            init_scale: s.init_scale,
            latent_noise: s.latent_noise,
            block_correlation: s.block_correlation,
            noise: s.noise,
            gain_spread: s.gain_spread,
            bias_scale: s.bias_scale,
            test_fraction: s.test_fraction,
            val_fraction: s.val_fraction,
            seed: self.seed,
            bimodal: s.bimodal.map(|[a, b]| (a, b)),
        }
    }

    pub fn forecaster_config(&self, feature_dim: usize) -> ForecasterConfig {
        let f = &self.forecaster;
        ForecasterConfig {
            mode: f.mode,
            readout: f.readout,
            feature_dim,
            step: f.feature_step,
            stride: f.stride,
            hidden: f.hidden,
            kernels: f.kernels,
            horizon: f.horizon,
        }
    }

    pub fn forecaster_train(&self, feature_dim: usize) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            w_l2: t.w_l2,
            w_adv: t.w_adv,
            base_lr: t.lr,
            decay_rate: t.decay,
            epochs: t.epochs,
            batch_forecaster: t.batch,
            batch_classifier: self.classifier.batch,
            steps_per_epoch: t.steps_per_epoch,
            seed: self.seed,
            forecaster: self.forecaster_config(feature_dim),
        }
    }

    pub fn classifier_config(&self, feature_dim: usize, classes: usize) -> ClassifierConfig {
        ClassifierConfig {
            feature_dim,
            hidden: self.classifier.hidden.clone(),
            kernels: self.classifier.kernels,
            classes,
        }
    }

    pub fn classifier_train(&self, feature_dim: usize) -> TrainConfig {
        let c = &self.classifier;
        TrainConfig {
            base_lr: c.lr,
            decay_rate: c.decay,
            epochs: c.epochs,
            batch_classifier: c.batch,
            ..self.forecaster_train(feature_dim)
        }
    }

    pub fn anticipation(&self) -> AnticipationConfig {
        let a = &self.anticipation;
        AnticipationConfig {
            observe_fraction: a.observe_frac,
            predict_fraction: a.predict_frac,
            pooling: a.pooling,
        }
    }
}

/// Serialise through `Display` / `FromStr`.
mod text {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}
