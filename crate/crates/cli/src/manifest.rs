//! Run manifests: config snapshot, data counts, warnings, and a content
//! digest for every file in the output directory. The manifest is the last
//! artifact a command writes and contains nothing volatile, so identically
//! configured runs emit byte-identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use valuelex::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "valuelex/manifest/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub config_snapshot: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    /// Relative path -> sha256 of every file in the output directory except
    /// this manifest itself.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn walk_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            walk_files(root, &path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Digests every file under `output_dir` (except the manifest file itself),
/// keyed by `/`-separated relative path.
pub fn digest_directory(output_dir: &Path, manifest_name: &str) -> Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    walk_files(output_dir, output_dir, &mut files)?;
    files.sort();
    let mut digests = BTreeMap::new();
    for path in files {
        let rel = path
            .strip_prefix(output_dir)
            .map_err(|e| Error::Parse(e.to_string()))?
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if rel == manifest_name {
            continue;
        }
        let bytes = std::fs::read(&path)?;
        digests.insert(rel, sha256_hex(&bytes));
    }
    Ok(digests)
}

impl RunManifest {
    pub fn new(command: &str, config_snapshot: serde_json::Value, seeds: BTreeMap<String, u64>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            tool_version: valuelex::VERSION.to_string(),
            command: command.to_string(),
            config_snapshot,
            seeds,
            counts: BTreeMap::new(),
            warnings: Vec::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_string(), value);
    }

    /// Digests the output directory and writes `manifest.<command>.json` as
    /// the final artifact. Returns the manifest path.
    pub fn finalize(mut self, output_dir: &Path) -> Result<PathBuf> {
        let name = format!("manifest.{}.json", self.command);
        self.artifacts = digest_directory(output_dir, &name)?;
        let path = output_dir.join(&name);
        let mut body = serde_json::to_string_pretty(&self)?;
        body.push('\n');
        std::fs::write(&path, body)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Writes a UTF-8, newline-terminated artifact file.
pub fn write_artifact(path: &Path, mut content: String) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    if !content.ends_with('\n') {
        content.push('\n');
    }
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file_except_itself() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.json"), "{}\n").unwrap();
        std::fs::create_dir_all(dir.path().join("cache")).unwrap();
        std::fs::write(dir.path().join("cache/b.jsonl"), "x\n").unwrap();
        let manifest = RunManifest::new("test", serde_json::Value::Null, BTreeMap::new());
        let path = manifest.finalize(dir.path()).unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        let keys: Vec<&String> = loaded.artifacts.keys().collect();
        assert_eq!(keys, vec!["a.json", "cache/b.jsonl"]);
        assert!(!loaded.artifacts.contains_key("manifest.test.json"));
    }

    #[test]
    fn digests_are_stable_sha256() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
