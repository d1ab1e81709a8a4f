//! Per-run manifest: what was run and what came out.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub verb: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub version: String,
    pub passed: bool,
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
    }

    /// `(file, digest)` pairs: the part of the manifest that must repeat
    /// exactly across identical runs.
    pub fn digests(&self) -> Vec<(String, String)> {
        self.outputs.iter().map(|o| (o.file.clone(), o.sha256.clone())).collect()
    }
}

pub fn file_digest(path: &Path) -> Result<OutputDigest, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(OutputDigest {
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}
