//! Append-only event log with periodic snapshots.
//!
//! `events.jsonl` holds one JSON event per line. `snapshot.json` holds the
//! workspace after the first `applied` events; it is written to a temporary
//! file and renamed into place. Opening a store loads the snapshot and
//! replays the remaining events.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::workflow::{Event, Workspace};

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Deserialize)]
struct Snapshot {
    applied: u64,
    workspace: Workspace,
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    applied: u64,
    workspace: &'a Workspace,
}

pub struct EventLog {
    dir: PathBuf,
    file: File,
    /// Events in the log.
    len: u64,
    /// Events covered by the last snapshot.
    snapshot_at: u64,
    snapshot_every: u64,
}

fn corrupt(msg: String) -> ServiceError {
    ServiceError::Storage(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

/// Parses a log. A final line without a newline is an interrupted append
/// and is dropped; returns the events and the byte length of the valid
/// prefix.
pub fn read_events(bytes: &[u8]) -> Result<(Vec<Event>, usize)> {
    let mut events = Vec::new();
    let mut valid = 0;
    let mut rest = bytes;
    while let Some(nl) = rest.iter().position(|&b| b == b'\n') {
        let line = &rest[..nl];
        if !line.iter().all(u8::is_ascii_whitespace) {
            let event = serde_json::from_slice(line).map_err(|e| {
                corrupt(format!("{LOG_FILE}: event {} is unreadable: {e}", events.len() + 1))
            })?;
            events.push(event);
        }
        valid += nl + 1;
        rest = &rest[nl + 1..];
    }
    Ok((events, valid))
}

impl EventLog {
    /// Opens (or creates) a store in `dir` and rebuilds its workspace.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<(Self, Workspace)> {
        fs::create_dir_all(dir)?;
        let log_path = dir.join(LOG_FILE);
        let bytes = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let (events, valid) = read_events(&bytes)?;
        if valid < bytes.len() {
            tracing::warn!(dropped = bytes.len() - valid, "dropping interrupted log append");
        }
        let (mut ws, applied) = match fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(b) => {
                let s: Snapshot = serde_json::from_slice(&b)
                    .map_err(|e| corrupt(format!("{SNAPSHOT_FILE}: {e}")))?;
                (s.workspace, s.applied)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (Workspace::new(), 0),
            Err(e) => return Err(e.into()),
        };
        if applied > events.len() as u64 {
            return Err(corrupt(format!(
                "snapshot covers {applied} events but the log has {}",
                events.len()
            )));
        }
        for e in &events[applied as usize..] {
            ws.apply(e)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&log_path)?;
        file.set_len(valid as u64)?;
        Ok((
            EventLog {
                dir: dir.to_path_buf(),
                file,
                len: events.len() as u64,
                snapshot_at: applied,
                snapshot_every: snapshot_every.max(1),
            },
            ws,
        ))
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Durably appends one event.
    pub fn append(&mut self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_vec(event).map_err(|e| corrupt(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.len += 1;
        Ok(())
    }

    pub fn snapshot_due(&self) -> bool {
        self.len - self.snapshot_at >= self.snapshot_every
    }

    pub fn snapshot(&mut self, ws: &Workspace) -> Result<()> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let body = serde_json::to_vec(&SnapshotRef {
            applied: self.len,
            workspace: ws,
        })
        .map_err(|e| corrupt(e.to_string()))?;
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        self.snapshot_at = self.len;
        Ok(())
    }
}

/// Replays a whole log from scratch.
pub fn replay(events: &[Event]) -> Result<Workspace> {
    let mut ws = Workspace::new();
    for e in events {
        ws.apply(e)?;
    }
    Ok(ws)
}
