//! Run manifest: resolved config snapshot, stage paths and timings.
//! Timestamps live only here, keeping primary outputs byte-stable.

use std::path::Path;

use serde::Serialize;

use crate::cache::StageRecord;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub config: serde_json::Value,
    pub stages: Vec<StageRecord>,
}

pub fn unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Write the run manifest atomically (temp file + rename).
pub fn write_run_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Data(format!("serialize run manifest: {e}")))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, json.as_bytes())
        .map_err(|e| CliError::Data(format!("write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Data(format!("rename {}: {e}", path.display())))?;
    Ok(())
}
