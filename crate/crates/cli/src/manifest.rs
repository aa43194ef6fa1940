use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Everything needed to repeat a run: the resolved configuration exactly as
/// used (flags already folded in), the seed, and what was written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    /// TOML of the resolved configuration. Feeding it back reproduces the run.
    pub config_snapshot: String,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub version: String,
    pub timestamp_unix_s: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &Path, config_snapshot: String, master_seed: u64, output_dir: &Path) -> Self {
        Self {
            command: command.into(),
            config_path: config_path.to_path_buf(),
            config_snapshot,
            master_seed,
            output_dir: output_dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
