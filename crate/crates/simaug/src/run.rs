//! Self-describing run records written next to every CLI output.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use simaug_core::rng::RNG_ALGORITHM;

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub args: Vec<String>,
    /// SHA-256 of the JSON-serialized effective configuration.
    pub config_hash: String,
    pub seed: u64,
    pub code_version: &'static str,
    pub rng: &'static str,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<RunRecord> {
        let config = serde_json::to_value(config)?;
        Ok(RunRecord {
            command: command.into(),
            args: std::env::args().collect(),
            config_hash: config_hash(&config)?,
            seed,
            code_version: env!("CARGO_PKG_VERSION"),
            rng: RNG_ALGORITHM,
            config,
            outputs: Vec::new(),
        })
    }

    /// `<dir>/run.json` for directory outputs, `<file>.run.json` otherwise.
    pub fn path_for(output: &Path) -> PathBuf {
        if output.is_dir() {
            output.join("run.json")
        } else {
            let mut name = output.file_name().unwrap_or_default().to_os_string();
            name.push(".run.json");
            output.with_file_name(name)
        }
    }

    pub fn write(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing run record {}", path.display()))?;
        Ok(path)
    }
}

pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"lr": 0.05, "seed": 1})).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(
            a,
            config_hash(&serde_json::json!({"lr": 0.05, "seed": 1})).unwrap()
        );
        assert_ne!(
            a,
            config_hash(&serde_json::json!({"lr": 0.05, "seed": 2})).unwrap()
        );
        assert_eq!(
            config_hash(&"").unwrap(),
            // digest of the two bytes `""`
            "12ae32cb1ec02d01eda3581b127c1fee3b0dc53572ed6baf239721a03d82e126"
        );
    }

    #[test]
    fn record_paths() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(RunRecord::path_for(dir.path()), dir.path().join("run.json"));
        let f = dir.path().join("model.bin");
        assert_eq!(
            RunRecord::path_for(&f),
            dir.path().join("model.bin.run.json")
        );
    }
}
