//! On-disk formats: per-video feature files, the dataset manifest and
//! model checkpoints.

mod checkpoint;
mod features;
mod manifest;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use features::{
    decode_features, encode_features, encode_text, read_features, write_features, FeatureFormat, FEATURE_MAGIC,
};
pub use manifest::{load_dataset, save_dataset, Dataset, DatasetManifest, ManifestEntry};

use std::path::PathBuf;

/// Everything that can go wrong reading or writing the formats above. Every
/// variant names the file involved.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic bytes (expected {expected:?})")]
    BadMagic { path: PathBuf, expected: &'static str },
    #[error("{path}: truncated: expected {expected} bytes, found {actual}")]
    Truncated { path: PathBuf, expected: usize, actual: usize },
    #[error("{path}: header says {field}={header} but the manifest says {manifest}")]
    HeaderMismatch {
        path: PathBuf,
        field: &'static str,
        header: usize,
        manifest: usize,
    },
    #[error("{path}: non-finite value in video `{video_id}` at row {row}, column {col}")]
    NonFinite {
        path: PathBuf,
        video_id: String,
        row: usize,
        col: usize,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: invalid checkpoint: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: fmrnn_core::Error,
    },
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}
