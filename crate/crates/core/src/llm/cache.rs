//! Append-only JSONL response cache keyed by model name and prompt hash.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub prompt_hash: String,
    pub response: String,
    pub timestamp: String,
}

pub fn cache_key(model: &str, prompt_hash: &str) -> String {
    format!("{model}/{prompt_hash}")
}

struct Inner {
    entries: HashMap<String, String>,
    file: File,
}

/// Completed responses survive crashes: every insert is one flushed line, and
/// a torn trailing line is skipped on reopen.
pub struct ResponseCache {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl ResponseCache {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(entry) => {
                        entries.insert(entry.key, entry.response);
                    }
                    Err(e) => log::warn!("{}:{}: skipping unreadable cache line: {e}", path.display(), idx + 1),
                }
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        // A torn last line would otherwise swallow the next record.
        if file.metadata().map(|m| m.len() > 0).unwrap_or(false) && !ends_with_newline(path)? {
            file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Ok(ResponseCache {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner { entries, file }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model: &str, prompt_hash: &str) -> Option<String> {
        let inner = self.inner.lock().expect("cache lock");
        inner.entries.get(&cache_key(model, prompt_hash)).cloned()
    }

    pub fn insert(&self, model: &str, prompt_hash: &str, response: &str) -> Result<()> {
        let entry = CacheEntry {
            key: cache_key(model, prompt_hash),
            model: model.to_string(),
            prompt_hash: prompt_hash.to_string(),
            response: response.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        let mut inner = self.inner.lock().expect("cache lock");
        inner
            .file
            .write_all(line.as_bytes())
            .and_then(|_| inner.file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        inner.entries.insert(entry.key, entry.response);
        Ok(())
    }
}

fn ends_with_newline(path: &Path) -> Result<bool> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(bytes.last() == Some(&b'\n'))
}
