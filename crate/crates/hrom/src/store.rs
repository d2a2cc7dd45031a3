//! Artifact directories and their manifests.
//!
//! Each stage writes into its own directory under the output root: `fom/`,
//! `offline-<label>/`, `online-<label>/`. Every directory carries a
//! `manifest.toml` with the configuration hashes and the SHA-256 of each
//! file it lists; consumers check both before reading. Wall-clock numbers go
//! to a separate `timing.txt` so that everything else is reproducible byte
//! for byte.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{CliError, PathContext, Result};

pub const MANIFEST: &str = "manifest.toml";
pub const TIMING: &str = "timing.txt";

pub fn fom_dir(root: &Path) -> PathBuf {
    root.join("fom")
}

pub fn offline_dir(root: &Path, label: &str) -> PathBuf {
    root.join(format!("offline-{label}"))
}

pub fn online_dir(root: &Path, label: &str) -> PathBuf {
    root.join(format!("online-{label}"))
}

/// A file listed in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).at(dir)
}

/// Writes `bytes` to `dir/name` and returns its manifest entry.
pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, bytes).at(&path)?;
    Ok(FileEntry {
        name: name.to_string(),
        sha256: sha256_hex(bytes),
    })
}

/// Serializes with `f` into memory, then writes.
pub fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<&mut Vec<u8>>) -> Result<()>) -> Result<FileEntry> {
    let mut bytes = Vec::new();
    {
        let mut w = BufWriter::new(&mut bytes);
        f(&mut w)?;
        std::io::Write::flush(&mut w)?;
    }
    write_bytes(dir, name, &bytes)
}

/// Reads a listed file and checks its digest.
pub fn read_verified(dir: &Path, entry: &FileEntry) -> Result<Vec<u8>> {
    let path = dir.join(&entry.name);
    let bytes = fs::read(&path).map_err(|e| CliError::Stale(format!("{}: {e}", path.display())))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(CliError::Stale(format!("{} does not match its manifest digest", path.display())));
    }
    Ok(bytes)
}

pub fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<()> {
    let text = toml::to_string(manifest).map_err(|e| CliError::Format(e.to_string()))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text).at(path)
}

pub fn read_manifest<T: DeserializeOwned>(dir: &Path) -> Result<T> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Stale(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn check_hash(what: &str, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(CliError::Stale(format!(
            "{what} hash {found} does not match the configuration ({expected}); rerun the earlier stage"
        )));
    }
    Ok(())
}

/// `key=value` lines.
pub fn write_timing(dir: &Path, entries: &[(&str, f64)]) -> Result<()> {
    let text: String = entries.iter().map(|(k, v)| format!("{k}={v:.6}\n")).collect();
    let path = dir.join(TIMING);
    fs::write(&path, text).at(path)
}

pub fn read_timing(dir: &Path, key: &str) -> Result<f64> {
    let path = dir.join(TIMING);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Stale(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.trim().parse().ok())
        .ok_or_else(|| CliError::Format(format!("{} has no `{key}`", path.display())))
}

/// Snapshot store manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomManifest {
    pub case: String,
    pub fom_hash: String,
    pub mesh_hash: String,
    pub seed: u64,
    pub linear_solver: String,
    pub steps: usize,
    pub linear_iterations: Option<usize>,
    /// Navier-Stokes only: some step ended above the continuity threshold.
    pub flagged: Option<bool>,
    pub max_step_continuity: Option<f64>,
    pub mesh: FileEntry,
    /// Transport only: the frozen convecting velocity.
    pub convecting: Option<FileEntry>,
    pub fields: Vec<SnapshotEntry>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub name: String,
    pub components: usize,
    pub n_dofs: usize,
    pub file: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineManifest {
    pub case: String,
    pub fom_hash: String,
    pub offline_hash: String,
    pub mesh_hash: String,
    pub layers: usize,
    pub obligatory_patches: Vec<String>,
    pub fields: Vec<OfflineField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineField {
    pub name: String,
    pub components: usize,
    pub requested_modes: usize,
    pub rank: usize,
    pub samples: usize,
    pub sampled_rows: usize,
    pub closure_cells: usize,
    pub orthonormality_error: f64,
    pub deim: Vec<usize>,
    pub basis: FileEntry,
    pub singular_values: FileEntry,
    pub points: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineManifest {
    pub case: String,
    pub fom_hash: String,
    pub offline_hash: String,
    pub mesh_hash: String,
    pub steps: usize,
    pub trajectories: Vec<FileEntry>,
    pub reconstructions: Vec<Reconstruction>,
    /// Report file name; not digested since the report carries timings.
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub time: f64,
    pub field: String,
    pub components: usize,
    pub file: FileEntry,
}
