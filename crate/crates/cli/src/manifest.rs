//! Per-run provenance record written next to every command's outputs.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub config_path: Option<String>,
    pub seed: u64,
    pub revision: String,
    pub out_dir: String,
    /// Worker threads available to the run.
    pub threads: usize,
    pub wall_clock_s: f64,
    pub outcome: String,
    pub exit_code: u8,
    /// Files written by the command, relative to `out_dir`.
    pub outputs: Vec<String>,
    /// Command-specific summary values.
    #[serde(default)]
    pub details: serde_json::Value,
}

/// Source revision baked in at build time through `ASVPLAN_REVISION`, else
/// the package version.
pub fn revision() -> String {
    option_env!("ASVPLAN_REVISION")
        .map(str::to_string)
        .unwrap_or_else(|| format!("asvplan-cli {}", env!("CARGO_PKG_VERSION")))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
