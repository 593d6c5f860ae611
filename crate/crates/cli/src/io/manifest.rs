use std::fs;
use std::path::{Path, PathBuf};

use fmrnn_core::data::{FeatureSequence, Split};
use serde::{Deserialize, Serialize};

use super::features::{read_features, write_features, FeatureFormat};
use super::{io_err, FormatError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub label: usize,
    /// relative to the manifest's directory
    pub path: String,
    pub frames: usize,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub dim: usize,
    pub class_names: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

/// A loaded dataset: videos in manifest order with their splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub videos: Vec<FeatureSequence>,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<FeatureSequence> {
        self.videos
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|(v, _)| v.clone())
            .collect()
    }
}

/// Write one feature file per video under `dir/features/` plus
/// `dir/manifest.json`; returns the manifest path.
pub fn save_dataset(
    dir: &Path,
    name: &str,
    class_names: &[String],
    videos: &[FeatureSequence],
    splits: &[Split],
    format: FeatureFormat,
) -> Result<PathBuf, FormatError> {
    let manifest_path = dir.join("manifest.json");
    if videos.len() != splits.len() {
        return Err(FormatError::Manifest {
            path: manifest_path,
            message: format!("{} videos but {} split assignments", videos.len(), splits.len()),
        });
    }
    let features = dir.join("features");
    fs::create_dir_all(&features).map_err(io_err(&features))?;
    let mut entries = Vec::with_capacity(videos.len());
    for (v, split) in videos.iter().zip(splits) {
        let rel = format!("features/{}.{}", v.video_id, format.extension());
        write_features(&dir.join(&rel), &v.frames, format)?;
        entries.push(ManifestEntry {
            video_id: v.video_id.clone(),
            label: v.label,
            path: rel,
            frames: v.len(),
            split: split.as_str().to_string(),
        });
    }
    let manifest = DatasetManifest {
        name: name.to_string(),
        dim: videos.first().map_or(0, |v| v.dim()),
        class_names: class_names.to_vec(),
        entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// Read a manifest and every feature file it references, cross-checking
/// frame counts and widths against the file contents.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, FormatError> {
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let bad = |message: String| FormatError::Manifest {
        path: manifest_path.to_path_buf(),
        message,
    };
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if manifest.class_names.is_empty() {
        return Err(bad("no class names".into()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut videos = Vec::with_capacity(manifest.entries.len());
    let mut splits = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        if e.label >= manifest.class_names.len() {
            return Err(bad(format!(
                "video `{}` has label {} but only {} classes",
                e.video_id,
                e.label,
                manifest.class_names.len()
            )));
        }
        let split: Split = e
            .split
            .parse()
            .map_err(|_| bad(format!("video `{}` has unknown split `{}`", e.video_id, e.split)))?;
        let path = base.join(&e.path);
        let frames = read_features(&path)?;
        if frames.rows() != e.frames {
            return Err(FormatError::HeaderMismatch {
                path,
                field: "T",
                header: frames.rows(),
                manifest: e.frames,
            });
        }
        if frames.cols() != manifest.dim {
            return Err(FormatError::HeaderMismatch {
                path,
                field: "d",
                header: frames.cols(),
                manifest: manifest.dim,
            });
        }
        for (row, values) in frames.iter_rows().enumerate() {
            if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                return Err(FormatError::NonFinite {
                    path,
                    video_id: e.video_id.clone(),
                    row,
                    col,
                });
            }
        }
        let seq = FeatureSequence::new(e.video_id.clone(), e.label, frames)
            .map_err(|source| FormatError::Core { path, source })?;
        videos.push(seq);
        splits.push(split);
    }
    Ok(Dataset {
        manifest,
        videos,
        splits,
    })
}
