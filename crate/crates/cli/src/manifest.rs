//! Run manifests written next to every artifact.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_secs: f64,
}

/// Hex SHA-256 of the JSON form of `config`.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex(&Sha256::digest(&json))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `<path>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub struct ManifestWriter {
    command: String,
    config_hash: String,
    seed: u64,
    inputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestWriter {
    pub fn start<C: Serialize>(command: &str, config: &C, seed: u64, inputs: &[&Path]) -> Self {
        ManifestWriter {
            command: command.to_string(),
            config_hash: config_hash(config),
            seed,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            started: Instant::now(),
        }
    }

    /// Write the manifest to `at` listing `outputs`.
    pub fn finish(self, at: &Path, outputs: &[&Path]) -> anyhow::Result<()> {
        let m = RunManifest {
            command: self.command,
            config_hash: self.config_hash,
            seed: self.seed,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let mut json = serde_json::to_string_pretty(&m)?;
        json.push('\n');
        std::fs::write(at, json).map_err(|e| anyhow::anyhow!("{}: {e}", at.display()))?;
        Ok(())
    }
}
