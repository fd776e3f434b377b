use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::UsageError;

/// Output directory that records every file it writes for `manifest.json`.
pub struct OutDir {
    root: PathBuf,
    files: BTreeMap<String, (String, usize)>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    path: &'a str,
    sha256: &'a str,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a serde_json::Value,
    files: Vec<ManifestEntry<'a>>,
}

impl OutDir {
    /// Creates the directory and checks that it is writable.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .map_err(|e| UsageError(format!("cannot create output directory {}: {e}", root.display())))?;
        let probe = root.join(".exfact-write-probe");
        fs::write(&probe, b"")
            .map_err(|e| UsageError(format!("output directory {} is not writable: {e}", root.display())))?;
        let _ = fs::remove_file(&probe);
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.root.join(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        let digest = Sha256::digest(bytes);
        let hex = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
        self.files.insert(name.to_string(), (hex, bytes.len()));
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes `manifest.json` listing the produced files in name order.
    pub fn finish(self, command: &str, config: &serde_json::Value) -> Result<()> {
        let files = self
            .files
            .iter()
            .map(|(path, (sha256, bytes))| ManifestEntry { path, sha256, bytes: *bytes })
            .collect();
        let m = Manifest { command, config, files };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        let p = self.root.join("manifest.json");
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))?;
        Ok(())
    }
}
