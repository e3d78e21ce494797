//! Run manifest: configuration echo, per-run certification numbers, and a
//! checksum for every emitted file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub label: String,
    pub gamma: f64,
    /// Step-halving difference, for runs that integrate the dynamics.
    pub convergence: Option<f64>,
    pub wall_time_s: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub config: BTreeMap<&'static str, String>,
    pub runs: Vec<RunRecord>,
    pub files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects output files while a command runs; every write goes through
/// here so the manifest cannot miss one.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Write { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    /// Writes the manifest itself (not listed inside it) and returns its path.
    pub fn finish(self, config: BTreeMap<&'static str, String>, runs: Vec<RunRecord>) -> Result<PathBuf> {
        let manifest = RunManifest { version: env!("CARGO_PKG_VERSION").to_string(), config, runs, files: self.files };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest always serializes");
        text.push('\n');
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn every_write_is_listed() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("nested")).unwrap();
        out.write("a.csv", "x\n1\n").unwrap();
        out.write("b.csv", "y\n2\n").unwrap();
        let path = out.finish(BTreeMap::new(), Vec::new()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        let files = v["files"].as_array().unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(files[0]["sha256"], sha256_hex(b"x\n1\n"));
        assert_eq!(files[1]["bytes"], 4);
    }
}
