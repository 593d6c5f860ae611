use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{ClassifierConfig, ClassifierModel, DiscriminatorModel};
use crate::featmap::{ForecasterConfig, ForecasterModel};
use crate::numcore::{HasParams, ParamStore};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Forecaster,
    Classifier,
    Discriminator,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forecaster => "forecaster",
            ModelKind::Classifier => "classifier",
            ModelKind::Discriminator => "discriminator",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forecaster" => Ok(ModelKind::Forecaster),
            "classifier" => Ok(ModelKind::Classifier),
            "discriminator" => Ok(ModelKind::Discriminator),
            other => Err(Error::MalformedCheckpoint(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Model kind, an ordered config echo and the named parameter arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub config: Vec<(String, String)>,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.config.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.config.push((key.to_string(), value)),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::MalformedCheckpoint(format!("missing config key `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::MalformedCheckpoint(format!("bad value for `{key}`: {raw}")))
    }

    fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.to_string(),
                found: self.kind.to_string(),
            });
        }
        Ok(())
    }

    pub fn from_forecaster(model: &ForecasterModel) -> Self {
        let c = model.config();
        let mut ck = Checkpoint {
            kind: ModelKind::Forecaster,
            config: Vec::new(),
            params: model.params().clone(),
        };
        ck.set("mode", c.mode);
        ck.set("readout", c.readout);
        ck.set("d", c.feature_dim);
        ck.set("D", c.step);
        ck.set("S", c.stride);
        ck.set("H", c.hidden);
        ck.set("n", c.kernels);
        ck.set("k", c.horizon);
        ck
    }

    pub fn into_forecaster(self) -> Result<ForecasterModel> {
        self.expect_kind(ModelKind::Forecaster)?;
        let config = ForecasterConfig {
            mode: self.require::<String>("mode")?.parse()?,
            readout: self.require::<String>("readout")?.parse()?,
            feature_dim: self.require("d")?,
            step: self.require("D")?,
            stride: self.require("S")?,
            hidden: self.require("H")?,
            kernels: self.require("n")?,
            horizon: self.require("k")?,
        };
        ForecasterModel::from_params(config, self.params)
    }

    pub fn from_classifier(model: &ClassifierModel) -> Self {
        let c = model.config();
        let mut ck = Checkpoint {
            kind: ModelKind::Classifier,
            config: Vec::new(),
            params: model.params().clone(),
        };
        ck.set("d", c.feature_dim);
        let hidden: Vec<String> = c.hidden.iter().map(|h| h.to_string()).collect();
        ck.set("hidden", hidden.join(","));
        ck.set("n", c.kernels);
        ck.set("classes", c.classes);
        ck
    }

    pub fn into_classifier(self) -> Result<ClassifierModel> {
        self.expect_kind(ModelKind::Classifier)?;
        let hidden = self
            .require::<String>("hidden")?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::MalformedCheckpoint(format!("bad hidden width `{s}`")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let config = ClassifierConfig {
            feature_dim: self.require("d")?,
            hidden,
            kernels: self.require("n")?,
            classes: self.require("classes")?,
        };
        ClassifierModel::from_params(config, self.params)
    }

    pub fn from_discriminator(model: &DiscriminatorModel) -> Self {
        let mut ck = Checkpoint {
            kind: ModelKind::Discriminator,
            config: Vec::new(),
            params: model.params().clone(),
        };
        ck.set("D", model.input_dim());
        ck
    }

    pub fn into_discriminator(self) -> Result<DiscriminatorModel> {
        self.expect_kind(ModelKind::Discriminator)?;
        let width: usize = self.require("D")?;
        let model = DiscriminatorModel::from_params(self.params)?;
        if model.input_dim() != width {
            return Err(Error::MalformedCheckpoint("discriminator width disagrees with header".into()));
        }
        Ok(model)
    }
}
