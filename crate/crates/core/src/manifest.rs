//! Run manifests: a JSON record of the subcommand, arguments, seeds, and
//! SHA-256 digests of every output file, written next to the outputs so a
//! run can be reproduced and verified byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub hash_algorithm: String,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String], seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            args: args.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            hash_algorithm: "sha256".to_string(),
            outputs: Vec::new(),
        }
    }

    /// Hashes `path` and records it under its file name.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.outputs.push(OutputDigest {
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            sha256: digest,
        });
        Ok(())
    }

    /// Writes the manifest as pretty JSON into `dir` as `run.json`.
    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = fs::read(path)?;
    Ok(sha256_bytes(&data))
}

pub fn sha256_bytes(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}
