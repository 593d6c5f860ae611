use std::fs;
use std::path::Path;

use fmrnn_core::models::{Checkpoint, ModelKind, CHECKPOINT_VERSION};
use fmrnn_core::numcore::ParamStore;

use super::{io_err, FormatError};

pub const CHECKPOINT_MAGIC: &str = "FMRNN-CHECKPOINT";

/// Text header (magic + version, kind, `config key value` lines,
/// `param name RxC` lines, `end`), then every parameter array as
/// little-endian `f64` in table order.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut header = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\nkind {}\n", ckpt.kind);
    for (k, v) in &ckpt.config {
        header.push_str(&format!("config {k} {v}\n"));
    }
    for (name, shape, _) in ckpt.params.iter() {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        header.push_str(&format!("param {name} {}\n", dims.join("x")));
    }
    header.push_str("end\n");
    let mut out = header.into_bytes();
    for (_, _, values) in ckpt.params.iter() {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(path: &Path, bytes: &[u8]) -> Result<Checkpoint, FormatError> {
    let bad = |message: String| FormatError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let end = find_header_end(bytes).ok_or_else(|| {
        if bytes.starts_with(CHECKPOINT_MAGIC.as_bytes()) {
            bad("header has no `end` line".into())
        } else {
            FormatError::BadMagic {
                path: path.to_path_buf(),
                expected: CHECKPOINT_MAGIC,
            }
        }
    })?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8".into()))?;
    let mut lines = header.lines();
    match lines.next().and_then(|l| l.split_once(' ')) {
        Some((CHECKPOINT_MAGIC, v)) if v == CHECKPOINT_VERSION.to_string() => {}
        Some((CHECKPOINT_MAGIC, v)) => return Err(bad(format!("unsupported version {v}"))),
        _ => {
            return Err(FormatError::BadMagic {
                path: path.to_path_buf(),
                expected: CHECKPOINT_MAGIC,
            })
        }
    }
    let kind: ModelKind = match lines.next().and_then(|l| l.strip_prefix("kind ")) {
        Some(k) => k.parse().map_err(|e: fmrnn_core::Error| bad(e.to_string()))?,
        None => return Err(bad("missing `kind` line".into())),
    };
    let mut config = Vec::new();
    let mut table: Vec<(String, Vec<usize>)> = Vec::new();
    for line in lines {
        if line == "end" {
            break;
        }
        if let Some(rest) = line.strip_prefix("config ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            config.push((k.to_string(), v.to_string()));
        } else if let Some(rest) = line.strip_prefix("param ") {
            let (name, dims) = rest
                .rsplit_once(' ')
                .ok_or_else(|| bad(format!("malformed parameter line `{line}`")))?;
            let shape = dims
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("malformed shape `{dims}` for `{name}`")))?;
            table.push((name.to_string(), shape));
        } else {
            return Err(bad(format!("unexpected header line `{line}`")));
        }
    }
    let body = &bytes[end..];
    let total: usize = table.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    if body.len() != 8 * total {
        return Err(FormatError::Truncated {
            path: path.to_path_buf(),
            expected: end + 8 * total,
            actual: bytes.len(),
        });
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut params = ParamStore::new();
    for (name, shape) in table {
        let n: usize = shape.iter().product();
        let v: Vec<f64> = values.by_ref().take(n).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("non-finite value in `{name}`")));
        }
        params.add(&name, &shape, v).map_err(|e| bad(e.to_string()))?;
    }
    Ok(Checkpoint { kind, config, params })
}

/// Byte offset just past the `end\n` line.
fn find_header_end(bytes: &[u8]) -> Option<usize> {
    let mut start = 0;
    while start < bytes.len() {
        let nl = bytes[start..].iter().position(|&b| b == b'\n')? + start;
        if &bytes[start..nl] == b"end" {
            return Some(nl + 1);
        }
        if !bytes[start..nl].is_ascii() {
            return None;
        }
        start = nl + 1;
    }
    None
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), FormatError> {
    fs::write(path, encode_checkpoint(ckpt)).map_err(io_err(path))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, FormatError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_checkpoint(path, &bytes)
}
