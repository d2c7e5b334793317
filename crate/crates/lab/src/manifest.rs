//! Run manifests: config echo, seed, checksums of every output file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Bookkeeping that legitimately differs between runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub wall_seconds: f64,
    pub workers: usize,
    pub rows_computed: usize,
    pub rows_reused: usize,
    pub rows_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub truncated: bool,
    pub truncation_reason: Option<String>,
    pub run: RunInfo,
    pub summary: serde_json::Value,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> LabResult<(String, u64)> {
    let bytes = fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl Manifest {
    pub fn load(dir: &Path) -> LabResult<Self> {
        let p = dir.join(MANIFEST_FILE);
        if !p.exists() {
            return Err(LabError::MissingManifest(dir.display().to_string()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(p)?)?)
    }

    /// Re-hashes the given files (relative to `dir`), keeps the list sorted,
    /// and writes the manifest.
    pub fn record_files(&mut self, dir: &Path, names: &[String]) -> LabResult<()> {
        for name in names {
            let (sha256, bytes) = sha256_file(&dir.join(name))?;
            self.files.retain(|f| &f.path != name);
            self.files.push(FileEntry {
                path: name.clone(),
                sha256,
                bytes,
            });
        }
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        self.save(dir)
    }

    pub fn save(&self, dir: &Path) -> LabResult<()> {
        write_atomic(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)?.as_bytes())
    }

    /// Names of listed files whose checksum no longer matches.
    pub fn verify(&self, dir: &Path) -> LabResult<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let p = dir.join(&f.path);
            if !p.exists() || sha256_file(&p)?.0 != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

/// The first line of every CSV output.
pub fn csv_preamble(config: &ExperimentConfig) -> String {
    format!(
        "# helmlab {} seed={} config={}\n",
        config.kind.name(),
        config.seed,
        &config.hash()[..16]
    )
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> LabResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
