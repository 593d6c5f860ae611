use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error(
        "feature dimension {dim} cannot be tiled by step {step} with stride {stride}; \
         choose D and S so that (d - D) is a multiple of S"
    )]
    IndivisiblePlan { dim: usize, step: usize, stride: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("sequence `{video}` has {frames} frames, need at least {needed}")]
    SequenceTooShort {
        video: String,
        frames: usize,
        needed: usize,
    },
    #[error("dataset has a single class; at least two are required")]
    SingleClass,
    #[error("block {0} has zero variance")]
    ZeroVariance(usize),
    #[error("recursive rollout requires horizon k = 1, model has k = {0}")]
    HorizonNotOne(usize),
    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
}
