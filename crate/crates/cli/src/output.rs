//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Collects output files and their checksums.
pub struct OutputDir {
    root: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), checksums: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.checksums.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    /// Write what `fill` produces into `name`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| CliError::Runtime(format!("formatting {name}: {e}")))?;
        self.write(name, &buf)
    }

    pub fn finish(self, manifest: ManifestInfo<'_>) -> Result<(), CliError> {
        let m = RunManifest {
            command: manifest.command,
            scenario: manifest.scenario,
            scenario_hash: manifest.scenario_hash,
            version: env!("CARGO_PKG_VERSION"),
            seed: manifest.seed,
            wall_time_s: manifest.wall_time_s,
            outputs: &self.checksums,
        };
        let text = serde_json::to_string_pretty(&m)
            .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        let path = self.root.join(MANIFEST);
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub scenario: &'a str,
    pub scenario_hash: &'a str,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    scenario: &'a str,
    scenario_hash: &'a str,
    version: &'a str,
    seed: u64,
    wall_time_s: f64,
    /// sha256 per output file, excluding this manifest.
    outputs: &'a BTreeMap<String, String>,
}
