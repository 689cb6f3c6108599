//! Append-only JSONL audit trail: one record per allow/deny decision.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use radaa_token::RiskClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub score: f64,
    pub class: RiskClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub ts: i64,
    pub actor: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskSummary>,
    /// `allow`, `deny`, or an error code.
    pub outcome: String,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit io: {0}")]
    Io(#[from] io::Error),
    #[error("audit record encoding: {0}")]
    Encode(#[from] serde_json::Error),
}

#[derive(Debug)]
enum Sink {
    File { path: PathBuf, file: File },
    Memory(Vec<AuditRecord>),
}

/// Single-writer log. Records with a timestamp earlier than the previous one
/// are written anyway and counted in [`AuditLog::clock_skew_count`].
#[derive(Debug)]
pub struct AuditLog {
    sink: Mutex<(Sink, Option<i64>)>,
    skewed: AtomicU64,
    appended: AtomicU64,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::with_sink(Sink::Memory(Vec::new()), None)
    }

    /// Opens `path` for appending; existing lines are kept.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AuditError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let last_ts = read_records(&path)
            .ok()
            .and_then(|r| r.last().map(|r| r.ts));
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self::with_sink(Sink::File { path, file }, last_ts))
    }

    fn with_sink(sink: Sink, last_ts: Option<i64>) -> Self {
        Self {
            sink: Mutex::new((sink, last_ts)),
            skewed: AtomicU64::new(0),
            appended: AtomicU64::new(0),
        }
    }

    pub fn append(&self, record: AuditRecord) -> Result<(), AuditError> {
        let mut guard = self.sink.lock();
        let (sink, last_ts) = &mut *guard;
        if last_ts.is_some_and(|t| record.ts < t) {
            self.skewed.fetch_add(1, Ordering::Relaxed);
        }
        match sink {
            Sink::File { file, .. } => {
                let mut line = serde_json::to_vec(&record)?;
                line.push(b'\n');
                file.write_all(&line)?;
                file.flush()?;
            }
            Sink::Memory(records) => records.push(record.clone()),
        }
        *last_ts = Some(last_ts.map_or(record.ts, |t| t.max(record.ts)));
        self.appended.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Records appended through this handle.
    pub fn appended(&self) -> u64 {
        self.appended.load(Ordering::Relaxed)
    }

    pub fn clock_skew_count(&self) -> u64 {
        self.skewed.load(Ordering::Relaxed)
    }

    /// Everything in the log, including lines written before this handle was opened.
    pub fn records(&self) -> Result<Vec<AuditRecord>, AuditError> {
        let guard = self.sink.lock();
        match &guard.0 {
            Sink::Memory(r) => Ok(r.clone()),
            Sink::File { path, .. } => read_records(path),
        }
    }
}

pub fn read_records(path: &Path) -> Result<Vec<AuditRecord>, AuditError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
