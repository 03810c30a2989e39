//! Content-keyed stage caching for the experiment pipeline.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::CliError;

/// 64-bit FNV-1a.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hash a serializable value through its canonical JSON bytes.
pub fn hash_json(value: &impl Serialize) -> u64 {
    fnv64(&serde_json::to_vec(value).expect("value serializes"))
}

/// Hash a file's contents.
pub fn hash_file(path: &Path) -> Result<u64, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot hash {}: {e}", path.display())))?;
    Ok(fnv64(&bytes))
}

/// Combine hashes into a chained key.
pub fn combine(parts: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(parts.len() * 8);
    for p in parts {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fnv64(&bytes)
}

/// Record of one executed (or skipped) stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub dir: PathBuf,
    pub cached: bool,
    pub wall_ms: u128,
}

/// Run a stage unless its key marker and outputs already exist.
///
/// Stages may share a directory, so each one keeps its own marker file.
/// The marker is written only after `compute` succeeds, so interrupted
/// stages re-run.
pub fn run_stage(
    name: &str,
    dir: &Path,
    key: u64,
    outputs: &[PathBuf],
    compute: impl FnOnce() -> Result<(), CliError>,
) -> Result<StageRecord, CliError> {
    let marker_name: String = name
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    let marker = dir.join(format!(".stage-{marker_name}"));
    let key_hex = format!("{key:016x}");
    let fresh = std::fs::read_to_string(&marker)
        .map(|text| text.trim() == key_hex)
        .unwrap_or(false)
        && outputs.iter().all(|p| p.exists());
    let start = Instant::now();
    if !fresh {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        let _ = std::fs::remove_file(&marker);
        compute()?;
        std::fs::write(&marker, &key_hex)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", marker.display())))?;
    }
    Ok(StageRecord {
        name: name.to_string(),
        dir: dir.to_path_buf(),
        cached: fresh,
        wall_ms: start.elapsed().as_millis(),
    })
}
