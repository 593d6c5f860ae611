//! Append-only JSON-lines metrics, CSV series and loss logs.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use fmrnn_core::engine::LossHistory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const LOSS_FILE: &str = "loss.jsonl";

/// First 16 hex digits of the SHA-256 of the resolved config.
pub fn run_id(config: &RunConfig) -> String {
    Sha256::digest(config.to_toml().as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Seconds since the epoch; `SOURCE_DATE_EPOCH` wins so that runs can be
/// made byte-reproducible.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x: String,
    pub y: String,
    pub points: Vec<[f64; 2]>,
}

impl Series {
    pub fn new(x: &str, y: &str) -> Self {
        Series {
            x: x.into(),
            y: y.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.points.push([x, y]);
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.x, self.y);
        for [x, y] in &self.points {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub timestamp: u64,
    pub command: String,
    pub config: RunConfig,
    pub scalars: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Series>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricsRecord {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        MetricsRecord {
            run_id: run_id(config),
            timestamp: timestamp(),
            command: command.into(),
            config: config.clone(),
            scalars: BTreeMap::new(),
            series: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    pub fn series(&mut self, name: &str, series: Series) {
        self.series.insert(name.into(), series);
    }

    /// Append one line to `<out>/metrics.jsonl` and write every series as
    /// `<out>/<name>.csv`.
    pub fn emit(&self, out: &Path) -> Result<PathBuf> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        for (name, s) in &self.series {
            let p = out.join(format!("{name}.csv"));
            fs::write(&p, s.to_csv()).with_context(|| format!("writing {}", p.display()))?;
        }
        let path = out.join(METRICS_FILE);
        append_line(&path, &serde_json::to_string(self)?)?;
        Ok(path)
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct LossLine<'a> {
    run_id: &'a str,
    model: &'a str,
    epoch: usize,
    step: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ce: Option<f64>,
    total: f64,
}

/// One line per optimiser step, appended to `<out>/loss.jsonl`.
pub fn append_loss_log(out: &Path, run_id: &str, model: &str, history: &LossHistory) -> Result<()> {
    let path = out.join(LOSS_FILE);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for r in &history.steps {
        let line = LossLine {
            run_id,
            model,
            epoch: r.epoch,
            step: r.step,
            l2: r.l2,
            adv: r.adv,
            disc: r.disc,
            ce: r.ce,
            total: r.total,
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_tracks_config() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(run_id(&a), run_id(&b));
        assert_eq!(run_id(&a).len(), 16);
        b.seed = 1;
        assert_ne!(run_id(&a), run_id(&b));
    }

    #[test]
    fn csv_layout() {
        let mut s = Series::new("p", "accuracy");
        s.push(0.0, 0.5);
        s.push(0.25, 0.75);
        assert_eq!(s.to_csv(), "p,accuracy\n0,0.5\n0.25,0.75\n");
    }

    #[test]
    fn records_append_and_parse() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let mut r = MetricsRecord::new("evaluate", &cfg);
        r.scalar("accuracy", 0.5);
        let mut s = Series::new("p", "accuracy");
        s.push(0.1, 0.4);
        r.series("accuracy_vs_p", s);
        r.emit(dir.path()).unwrap();
        r.emit(dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let back: MetricsRecord = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, r);
        assert!(dir.path().join("accuracy_vs_p.csv").exists());
    }
}
