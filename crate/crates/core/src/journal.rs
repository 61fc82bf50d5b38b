//! Append-only JSON Lines persistence for relation records.
//!
//! One shared file per run, one object per inserted record:
//! `{"rel": "<name>", "t": <int>, "seq": <int>, "v": [<values>]}`.
//! Replaying rebuilds every window and the sequence counter without
//! running triggers or rules.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::store::{Record, Store, StoreError};
use crate::value::Value;

#[derive(Serialize)]
struct EntryRef<'a> {
    rel: &'a str,
    t: u64,
    seq: u64,
    v: &'a [Value],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEntry {
    pub rel: String,
    pub t: u64,
    pub seq: u64,
    pub v: Vec<Value>,
}

/// Serializes one record as a log line (without the trailing newline).
pub fn encode_entry(relation: &str, record: &Record) -> String {
    serde_json::to_string(&EntryRef {
        rel: relation,
        t: record.t,
        seq: record.seq,
        v: &record.values,
    })
    .expect("log entries always serialize")
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: unparsable log entry: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {source}")]
    Apply {
        path: PathBuf,
        line: usize,
        #[source]
        source: StoreError,
    },
}

impl JournalError {
    pub fn line(&self) -> Option<usize> {
        match self {
            JournalError::Io { .. } => None,
            JournalError::Parse { line, .. } | JournalError::Apply { line, .. } => Some(*line),
        }
    }
}

pub struct Journal {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Journal {
    pub fn open(path: impl AsRef<Path>) -> Result<Journal, JournalError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| JournalError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(Journal {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, relation: &str, record: &Record) -> Result<(), JournalError> {
        let line = encode_entry(relation, record);
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|source| JournalError::Io {
                path: self.path.clone(),
                source,
            })
    }

    /// Flushes buffers and asks the OS to persist the file.
    pub fn sync(&mut self) -> Result<(), JournalError> {
        self.out
            .flush()
            .and_then(|_| self.out.get_ref().sync_all())
            .map_err(|source| JournalError::Io {
                path: self.path.clone(),
                source,
            })
    }
}

/// Replays a log into `store`, which must already hold the program's
/// relations. A missing file is an empty log. Returns the number of
/// entries applied.
pub fn replay_log(path: impl AsRef<Path>, store: &mut Store) -> Result<usize, JournalError> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
        Err(source) => {
            return Err(JournalError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut applied = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| JournalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line).map_err(|e| JournalError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        store
            .insert(&entry.rel, entry.v, entry.t, entry.seq)
            .map_err(|source| JournalError::Apply {
                path: path.to_path_buf(),
                line: line_no,
                source,
            })?;
        applied += 1;
    }
    Ok(applied)
}
