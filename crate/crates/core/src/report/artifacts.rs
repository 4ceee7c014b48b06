use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Suffix carried by an output until it is complete.
pub const PARTIAL_SUFFIX: &str = ".partial";

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub counts: std::collections::BTreeMap<String, u64>,
}

impl Manifest {
    pub fn get(&self, path: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|e| e.path == path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((total, hex::encode(hasher.finalize())))
}

/// Output directory whose files appear under their final names only once
/// complete.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    files: Vec<String>,
    counts: std::collections::BTreeMap<String, u64>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), counts: Default::default() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Where `name` is written while in progress.
    pub fn partial_path(&self, name: &str) -> Result<PathBuf> {
        let path = self.dir.join(format!("{name}{PARTIAL_SUFFIX}"));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(path)
    }

    /// Promote the partial file for `name` to its final name.
    pub fn commit(&mut self, name: &str) -> Result<PathBuf> {
        let from = self.dir.join(format!("{name}{PARTIAL_SUFFIX}"));
        let to = self.dir.join(name);
        std::fs::rename(&from, &to).map_err(|e| Error::io(&from, e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(to)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let tmp = self.partial_path(name)?;
        std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
        self.commit(name)
    }

    pub fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_string(), value);
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Hash every committed file and write the manifest.
    pub fn finish(mut self) -> Result<(Manifest, String)> {
        let mut manifest = Manifest { files: Vec::new(), counts: std::mem::take(&mut self.counts) };
        for name in &self.files {
            let (bytes, sha256) = sha256_file(&self.dir.join(name))?;
            manifest.files.push(ManifestEntry { path: name.clone(), bytes, sha256 });
        }
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        self.write(MANIFEST_NAME, text)?;
        Ok((manifest, digest))
    }
}
