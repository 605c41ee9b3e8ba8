//! Completed-run cache: one JSON file per run hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

/// What a successful run produced; everything the tables need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_hash: String,
    pub seed: u64,
    pub slice_step: usize,
    /// Percent.
    pub quality_achieved: f64,
    pub perf_raw: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_history: Vec<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct RunCache {
    dir: PathBuf,
}

impl RunCache {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).at(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// A stored record, or `None` when absent. Unreadable entries are errors
    /// rather than silent misses.
    pub fn get(&self, hash: &str) -> Result<Option<RunRecord>> {
        let path = self.path(hash);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let record: RunRecord = serde_json::from_str(&text)?;
        if record.run_hash != hash {
            return Err(Error::Invalid(format!(
                "cache entry {} holds run {}",
                path.display(),
                record.run_hash
            )));
        }
        Ok(Some(record))
    }

    /// Write through a temporary file so readers never see a partial entry.
    pub fn put(&self, record: &RunRecord) -> Result<()> {
        let path = self.path(&record.run_hash);
        let tmp = self.dir.join(format!("{}.tmp", record.run_hash));
        let mut text = serde_json::to_string_pretty(record)?;
        text.push('\n');
        std::fs::write(&tmp, text).at(&tmp)?;
        std::fs::rename(&tmp, &path).at(&path)
    }
}
