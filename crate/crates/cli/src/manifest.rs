//! Run manifests: config snapshot, artifact checksums, tool version, and
//! wall-clock metadata. Exactly one manifest per completed run directory.
//!
//! Everything except the `timing` block is a pure function of (config, seed,
//! inputs); determinism checks compare manifests with `timing` removed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub duration_ms: u128,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<ArtifactRecord>,
    pub timing: Timing,
}

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: u64,
    config: BTreeMap<String, String>,
    artifacts: &[PathBuf],
    started: SystemTime,
) -> Result<PathBuf, CliError> {
    let mut records = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let data = std::fs::read(artifact).map_err(CliError::io(artifact.display().to_string()))?;
        let digest = Sha256::digest(&data);
        let rel = artifact
            .strip_prefix(out_dir)
            .unwrap_or(artifact)
            .display()
            .to_string();
        records.push(ArtifactRecord {
            path: rel,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            bytes: data.len() as u64,
        });
    }
    records.sort_by(|a, b| a.path.cmp(&b.path));

    let now = SystemTime::now();
    let manifest = RunManifest {
        tool: "pulsecal".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        config,
        artifacts: records,
        timing: Timing {
            started_unix_ms: started
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_millis(),
            duration_ms: now.duration_since(started).unwrap_or_default().as_millis(),
        },
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Input(format!("manifest serialization: {e}")))?;
    body.push('\n');
    std::fs::write(&path, body).map_err(CliError::io(path.display().to_string()))?;
    Ok(path)
}
