//! Append-only response cache: one JSON record per line, keyed by a stable
//! content hash. Replays are byte-identical; a record is never rewritten.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

pub trait CacheRecord: Serialize + DeserializeOwned + Clone + Send + Sync {
    fn key(&self) -> &str;
}

pub struct CacheFile<T> {
    path: Option<PathBuf>,
    map: RwLock<HashMap<String, T>>,
    appender: Mutex<Option<File>>,
}

impl<T: CacheRecord> CacheFile<T> {
    /// In-memory cache with no persistence.
    pub fn ephemeral() -> Self {
        Self {
            path: None,
            map: RwLock::new(HashMap::new()),
            appender: Mutex::new(None),
        }
    }

    /// Opens (or creates) a line-delimited cache file and loads every record.
    /// Unparseable lines (e.g. a truncated tail after a hard kill) are skipped.
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<T>(&line) {
                    Ok(rec) => {
                        map.insert(rec.key().to_string(), rec);
                    }
                    Err(e) => {
                        log::warn!("skipping bad cache line {} in {:?}: {e}", lineno + 1, path);
                    }
                }
            }
        }
        let appender = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            map: RwLock::new(map),
            appender: Mutex::new(Some(appender)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<T> {
        self.map.read().unwrap().get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts a record, appending it to the backing file. First write wins;
    /// an existing record is left untouched.
    pub fn insert(&self, record: T) -> Result<()> {
        let mut map = self.map.write().unwrap();
        if map.contains_key(record.key()) {
            return Ok(());
        }
        if let Some(file) = self.appender.lock().unwrap().as_mut() {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        map.insert(record.key().to_string(), record);
        Ok(())
    }
}

/// Tracks cache keys with a network call in flight so that concurrent misses
/// on the same key collapse to a single provider call.
pub struct Inflight {
    keys: Mutex<HashSet<String>>,
    freed: Condvar,
}

impl Default for Inflight {
    fn default() -> Self {
        Self {
            keys: Mutex::new(HashSet::new()),
            freed: Condvar::new(),
        }
    }
}

impl Inflight {
    /// Blocks until `key` is not in flight, then claims it.
    pub fn enter(&self, key: &str) {
        let mut keys = self.keys.lock().unwrap();
        while keys.contains(key) {
            keys = self.freed.wait(keys).unwrap();
        }
        keys.insert(key.to_string());
    }

    pub fn exit(&self, key: &str) {
        self.keys.lock().unwrap().remove(key);
        self.freed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
    struct Rec {
        key_hash: String,
        value: String,
    }

    impl CacheRecord for Rec {
        fn key(&self) -> &str {
            &self.key_hash
        }
    }

    #[test]
    fn reload_preserves_records_and_skips_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let cache = CacheFile::<Rec>::open(&path).unwrap();
            cache
                .insert(Rec {
                    key_hash: "a".into(),
                    value: "1".into(),
                })
                .unwrap();
        }
        // Simulate a truncated tail from a hard interrupt.
        {
            use std::io::Write;
            let mut f = OpenOptions::new().append(true).open(&path).unwrap();
            f.write_all(b"{\"key_hash\":\"b\",\"val").unwrap();
        }
        let cache = CacheFile::<Rec>::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get("a").unwrap().value, "1");
        assert!(cache.get("b").is_none());
    }

    #[test]
    fn first_insert_wins() {
        let cache = CacheFile::<Rec>::ephemeral();
        cache
            .insert(Rec {
                key_hash: "k".into(),
                value: "first".into(),
            })
            .unwrap();
        cache
            .insert(Rec {
                key_hash: "k".into(),
                value: "second".into(),
            })
            .unwrap();
        assert_eq!(cache.get("k").unwrap().value, "first");
    }
}
