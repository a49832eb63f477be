//! Append-only session log. One JSON object per line,
//! `{"sha256":"<hex>","event":{...}}`, where the hash covers the exact event
//! bytes. Each append is a single write followed by fsync.
//!
//! On open, a trailing line that is torn (no newline) or fails its check is
//! taken to be an interrupted append: it is dropped and the file truncated.
//! A bad line anywhere else means the log is damaged and opening fails.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::session::{Answer, Item};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        items: Vec<Item>,
        seed: u64,
        at_ms: u64,
    },
    AnswerAccepted {
        session_id: String,
        answer: Answer,
        at_ms: u64,
    },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("log line {line} is damaged: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("cannot serialize event: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Deserialize)]
struct Envelope<'a> {
    sha256: &'a str,
    #[serde(borrow)]
    event: &'a RawValue,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn encode_line(event: &Event) -> Result<Vec<u8>, serde_json::Error> {
    let body = serde_json::to_string(event)?;
    Ok(format!(
        "{{\"sha256\":\"{}\",\"event\":{body}}}\n",
        digest(body.as_bytes())
    )
    .into_bytes())
}

fn decode_line(line: &[u8]) -> Result<Event, String> {
    let text = std::str::from_utf8(line).map_err(|e| e.to_string())?;
    let envelope: Envelope = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if digest(envelope.event.get().as_bytes()) != envelope.sha256 {
        return Err("checksum mismatch".into());
    }
    serde_json::from_str(envelope.event.get()).map_err(|e| e.to_string())
}

/// Events recovered from `bytes` and the length of the valid prefix.
pub fn read_log(bytes: &[u8]) -> Result<(Vec<Event>, usize), StoreError> {
    let mut events = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let Some(end) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            // Torn final append.
            break;
        };
        let line = &bytes[offset..offset + end];
        let next = offset + end + 1;
        match decode_line(line) {
            Ok(event) => events.push(event),
            Err(_) if next == bytes.len() => break,
            Err(reason) => {
                return Err(StoreError::Corrupt {
                    line: line_no,
                    reason,
                })
            }
        }
        offset = next;
    }
    Ok((events, offset))
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
}

#[derive(Debug, Default)]
pub struct Recovery {
    pub events: Vec<Event>,
    /// Bytes cut from the end of the file during recovery.
    pub dropped_bytes: u64,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<(Store, Recovery), StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let (events, valid) = read_log(&bytes)?;
        let dropped_bytes = (bytes.len() - valid) as u64;
        if dropped_bytes > 0 {
            file.set_len(valid as u64).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        Ok((
            Store { path, file },
            Recovery {
                events,
                dropped_bytes,
            },
        ))
    }

    /// Durably appends one event; returns only after the data is synced.
    pub fn append(&mut self, event: &Event) -> Result<(), StoreError> {
        let line = encode_line(event)?;
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
