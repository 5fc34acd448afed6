use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hash of everything that determines the outputs of a run: the command,
/// the tool version and its fully resolved inputs, seed included.
pub fn config_hash<T: Serialize>(command: &str, inputs: &T) -> Result<String> {
    // serde_json maps are sorted, so this is canonical
    let doc = serde_json::json!({
        "command": command,
        "tool_version": TOOL_VERSION,
        "inputs": serde_json::to_value(inputs)?,
    });
    let bytes = serde_json::to_vec(&doc)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub rng: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, master_seed: u64, started: DateTime<Utc>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            config_hash,
            master_seed,
            rng: rspnet::RNG_ALGORITHM.to_owned(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_inputs_and_command() {
        let a = config_hash("simulate", &serde_json::json!({"seed": 1})).unwrap();
        let b = config_hash("simulate", &serde_json::json!({"seed": 2})).unwrap();
        let c = config_hash("ensemble", &serde_json::json!({"seed": 1})).unwrap();
        assert_eq!(a, config_hash("simulate", &serde_json::json!({"seed": 1})).unwrap());
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn key_order_does_not_matter() {
        let a = config_hash("x", &serde_json::json!({"a": 1, "b": 2})).unwrap();
        let b = config_hash("x", &serde_json::json!({"b": 2, "a": 1})).unwrap();
        assert_eq!(a, b);
    }
}
