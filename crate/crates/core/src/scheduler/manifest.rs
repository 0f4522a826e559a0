//! Append-only JSON-lines task log. The state of a run is the replay of its
//! records; the last record for a task id wins.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SchedulerError;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub task_id: String,
    pub status: TaskStatus,
    pub ts_ms: u64,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// First 8 bytes of SHA-256 over `parts`, each length-prefixed, as hex.
pub fn fingerprint_hex<I, B>(parts: I) -> String
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    for p in parts {
        let p = p.as_ref();
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct Manifest {
    path: PathBuf,
    file: File,
    records: Vec<ManifestRecord>,
}

impl Manifest {
    /// Open for appending, replaying existing records. A torn final line
    /// from an interrupted write is dropped and truncated away; any other
    /// unreadable line is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SchedulerError> {
        let path = path.as_ref().to_path_buf();
        let records = if path.exists() { Self::read(&path)? } else { Vec::new() };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(SchedulerError::io(&path))?;
        let mut m = Self { path, file, records };
        m.repair_tail()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Vec<ManifestRecord>, SchedulerError> {
        let text = fs::read_to_string(path).map_err(SchedulerError::io(path))?;
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let mut out = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let body = line.trim();
            if body.is_empty() {
                continue;
            }
            match serde_json::from_str(body) {
                Ok(r) => out.push(r),
                Err(_) if i + 1 == lines.len() && !line.ends_with('\n') => break,
                Err(e) => {
                    return Err(SchedulerError::ManifestCorrupt {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    fn repair_tail(&mut self) -> Result<(), SchedulerError> {
        let len = self.file.metadata().map_err(SchedulerError::io(&self.path))?.len();
        if len > 0 {
            let bytes = fs::read(&self.path).map_err(SchedulerError::io(&self.path))?;
            if bytes.last() != Some(&b'\n') {
                let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
                self.file.set_len(keep as u64).map_err(SchedulerError::io(&self.path))?;
            }
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    /// Append and sync one record.
    pub fn append(&mut self, mut rec: ManifestRecord) -> Result<(), SchedulerError> {
        if rec.ts_ms == 0 {
            rec.ts_ms = now_ms();
        }
        let mut line = serde_json::to_string(&rec).expect("record serializes");
        line.push('\n');
        let io = SchedulerError::io(&self.path);
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(io)?;
        self.records.push(rec);
        Ok(())
    }

    /// Last record per task id.
    pub fn latest(&self) -> HashMap<&str, &ManifestRecord> {
        let mut m = HashMap::new();
        for r in &self.records {
            m.insert(r.task_id.as_str(), r);
        }
        m
    }

    /// True when the latest record for `task_id` is `done` with this
    /// fingerprint.
    pub fn is_done(&self, task_id: &str, fingerprint: &str) -> bool {
        self.records
            .iter()
            .rev()
            .find(|r| r.task_id == task_id)
            .is_some_and(|r| r.status == TaskStatus::Done && r.fingerprint == fingerprint)
    }
}
