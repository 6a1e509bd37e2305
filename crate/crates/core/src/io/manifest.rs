use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    /// Absent for the manifest itself.
    pub sha256: Option<String>,
    pub bytes: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Random streams of the master seed used by the run (chains,
    /// replicates, paths).
    pub streams: Vec<String>,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub divergences: Option<usize>,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            streams: Vec::new(),
            config,
            files: Vec::new(),
            divergences: None,
            wall_time_seconds: 0.0,
        }
    }

    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: Some(sha256_hex(bytes)),
            bytes: Some(bytes.len() as u64),
        });
    }

    /// Digest recorded for `name`.
    pub fn digest(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|f| f.path == name)
            .and_then(|f| f.sha256.as_deref())
    }

    /// Serialized manifest listing itself (without digest) last.
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut m = self.clone();
        m.files.push(FileEntry {
            path: MANIFEST_FILE.to_string(),
            sha256: None,
            bytes: None,
        });
        Ok(serde_json::to_vec_pretty(&m)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
