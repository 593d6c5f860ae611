use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::numcore::Matrix;
use crate::{Error, Result};

/// One video: `T x d` per-frame features plus its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    pub label: usize,
    pub frames: Matrix,
}

impl FeatureSequence {
    /// Validates `T >= 1` and that every entry is finite.
    pub fn new(video_id: impl Into<String>, label: usize, frames: Matrix) -> Result<Self> {
        let video_id = video_id.into();
        if frames.rows() == 0 || frames.cols() == 0 {
            return Err(Error::SequenceTooShort {
                video: video_id,
                frames: frames.rows(),
                needed: 1,
            });
        }
        for (r, row) in frames.iter_rows().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("video `{video_id}` row {r} column {c}")));
            }
        }
        Ok(FeatureSequence {
            video_id,
            label,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// Common feature width of a dataset.
pub fn dataset_dim(videos: &[FeatureSequence]) -> Result<usize> {
    let first = videos.first().ok_or(Error::Empty("dataset"))?;
    let d = first.dim();
    for v in videos {
        if v.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "dataset feature width",
                expected: d,
                actual: v.dim(),
            });
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}
