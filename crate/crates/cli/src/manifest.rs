//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Every option after defaults were applied.
    pub flags: serde_json::Value,
    pub seed: u64,
    pub workers: usize,
    pub inputs: BTreeMap<String, String>,
    /// Content digest per output. Evaluation reports are hashed without
    /// their timing field.
    pub outputs: BTreeMap<String, String>,
    pub started_at_unix: f64,
    pub finished_at_unix: f64,
}

pub fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for item in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = item?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// SHA-256 of a file, or of a directory's `(relative path, file digest)` list.
pub fn digest_path(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return sha256_file(path);
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(path).unwrap_or(&f).to_string_lossy().replace('\\', "/");
        if rel == "manifest.json" {
            continue;
        }
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(sha256_file(&f)?.as_bytes());
        h.update(b"\n");
    }
    Ok(hex::encode(h.finalize()))
}

/// Digest of an evaluation report with `timing` removed.
pub fn digest_report(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("timing");
    }
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&value)?)))
}

/// Where the manifest for `out` goes: inside an output directory, or beside
/// an output file as `<file>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

impl RunManifest {
    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(manifest_path(dir.path()), dir.path().join("manifest.json"));
        let file = dir.path().join("r.json");
        assert_eq!(manifest_path(&file), dir.path().join("r.json.manifest.json"));
    }

    #[test]
    fn directory_digest_ignores_manifest_and_order() {
        let a = tempfile::tempdir().unwrap();
        std::fs::write(a.path().join("x.json"), "1").unwrap();
        std::fs::write(a.path().join("y.json"), "2").unwrap();
        let before = digest_path(a.path()).unwrap();
        std::fs::write(a.path().join("manifest.json"), "{}").unwrap();
        assert_eq!(before, digest_path(a.path()).unwrap());
        std::fs::write(a.path().join("y.json"), "3").unwrap();
        assert_ne!(before, digest_path(a.path()).unwrap());
    }
}
