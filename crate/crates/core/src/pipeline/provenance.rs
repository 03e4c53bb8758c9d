//! Per-run provenance: content hashes of the manifest and of every stage's
//! inputs and outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut file = fs::File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Path (relative to the output directory where possible) → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub manifest_sha256: String,
    pub stages: Vec<StageRecord>,
    /// SHA-256 over everything above except wall-clock times; equal for
    /// runs that produced identical artifacts from identical inputs.
    pub content_digest: String,
}

impl ProvenanceRecord {
    pub fn new(experiment: &str, seed: u64, manifest_sha256: String) -> Self {
        let mut rec = ProvenanceRecord {
            tool: TOOL.to_owned(),
            version: VERSION.to_owned(),
            experiment: experiment.to_owned(),
            seed,
            manifest_sha256,
            stages: Vec::new(),
            content_digest: String::new(),
        };
        rec.content_digest = rec.digest();
        rec
    }

    /// Adds a stage, replacing an earlier record of the same name.
    pub fn upsert(&mut self, stage: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == stage.name) {
            Some(slot) => *slot = stage,
            None => self.stages.push(stage),
        }
        self.content_digest = self.digest();
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for field in [&self.tool, &self.version, &self.experiment, &self.seed.to_string(), &self.manifest_sha256] {
            h.update(field.as_bytes());
            h.update([0]);
        }
        for s in &self.stages {
            h.update(s.name.as_bytes());
            h.update([1]);
            for (tag, map) in [(b'i', &s.inputs), (b'o', &s.outputs)] {
                for (path, hash) in map {
                    h.update([tag]);
                    h.update(path.as_bytes());
                    h.update([0]);
                    h.update(hash.as_bytes());
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::format("provenance", e.to_string()))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format("provenance", e.to_string()))
    }
}
