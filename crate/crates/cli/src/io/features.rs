use std::fs;
use std::path::Path;

use fmrnn_core::numcore::Matrix;

use super::{io_err, FormatError};

pub const FEATURE_MAGIC: &[u8; 4] = b"FMF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    /// `FMF1`, `u32` T, `u32` d, then `T * d` little-endian `f32`
    Binary,
    /// one comma-separated frame per line
    Text,
}

impl FeatureFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FeatureFormat::Binary => "fmf",
            FeatureFormat::Text => "csv",
        }
    }
}

/// Values are stored as `f32`; anything not representable is rounded.
pub fn encode_features(frames: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * frames.as_slice().len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(frames.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(frames.cols() as u32).to_le_bytes());
    for &v in frames.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Shortest round-trip decimal of each `f32` value.
pub fn encode_text(frames: &Matrix) -> String {
    let mut out = String::new();
    for row in frames.iter_rows() {
        let line: Vec<String> = row.iter().map(|&v| format!("{}", v as f32)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Decode either format (values are f32 in both); the binary one is recognised by its magic bytes,
/// anything else is parsed as text.
pub fn decode_features(path: &Path, bytes: &[u8]) -> Result<Matrix, FormatError> {
    if bytes.starts_with(FEATURE_MAGIC) {
        decode_binary(path, bytes)
    } else if bytes.len() >= 4 && bytes[..4].iter().any(|b| !b.is_ascii()) {
        Err(FormatError::BadMagic {
            path: path.to_path_buf(),
            expected: "FMF1",
        })
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| FormatError::BadMagic {
            path: path.to_path_buf(),
            expected: "FMF1",
        })?;
        decode_text(path, text)
    }
}

fn decode_binary(path: &Path, bytes: &[u8]) -> Result<Matrix, FormatError> {
    if bytes.len() < 12 {
        return Err(FormatError::Truncated {
            path: path.to_path_buf(),
            expected: 12,
            actual: bytes.len(),
        });
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + 4 * t * d;
    if bytes.len() != expected {
        return Err(FormatError::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Matrix::from_vec(t, d, data).map_err(|source| FormatError::Core {
        path: path.to_path_buf(),
        source,
    })
}

fn decode_text(path: &Path, text: &str) -> Result<Matrix, FormatError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f32>().map(f64::from))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(FormatError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected {} values, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FormatError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no frames".into(),
        });
    }
    Matrix::from_rows(&rows).map_err(|source| FormatError::Core {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_features(path: &Path, frames: &Matrix, format: FeatureFormat) -> Result<(), FormatError> {
    let bytes = match format {
        FeatureFormat::Binary => encode_features(frames),
        FeatureFormat::Text => encode_text(frames).into_bytes(),
    };
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_features(path: &Path) -> Result<Matrix, FormatError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_features(path, &bytes)
}
