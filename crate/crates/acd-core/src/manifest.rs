//! Dataset manifests: JSONL, one row per clip.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::TriStateLabelVector;

/// One dataset entry: a WAV path (relative to the manifest's directory),
/// its per-class labels and its duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: String,
    pub labels: TriStateLabelVector,
    pub duration_s: f64,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("failed to read manifest {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("manifest {path} line {line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("manifest {path} line {line}: expected {want} classes, got {got}")]
    ClassCountMismatch {
        path: String,
        line: usize,
        want: usize,
        got: usize,
    },
}

/// Read a JSONL manifest, checking that all rows agree on the class count.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, ManifestError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| ManifestError::Io {
        path: display.clone(),
        detail: e.to_string(),
    })?;
    let mut rows = Vec::new();
    let mut classes = None;
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ManifestError::Io {
            path: display.clone(),
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ManifestRow =
            serde_json::from_str(&line).map_err(|e| ManifestError::Parse {
                path: display.clone(),
                line: idx + 1,
                detail: e.to_string(),
            })?;
        let want = *classes.get_or_insert(row.labels.len());
        if row.labels.len() != want {
            return Err(ManifestError::ClassCountMismatch {
                path: display,
                line: idx + 1,
                want,
                got: row.labels.len(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Write rows as JSONL. Serialization is deterministic, so identical rows
/// produce byte-identical files.
pub fn write_manifest(path: impl AsRef<Path>, rows: &[ManifestRow]) -> Result<(), ManifestError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| ManifestError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(())
}

/// Conventional path of the ground-truth sidecar next to a manifest.
pub fn truth_sidecar_path(manifest_path: impl AsRef<Path>) -> std::path::PathBuf {
    let p = manifest_path.as_ref();
    let mut name = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    name.push_str(".truth.jsonl");
    p.with_file_name(name)
}
