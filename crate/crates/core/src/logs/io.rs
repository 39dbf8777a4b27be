//! JSONL persistence for session logs.
//!
//! One session per line. Writes are buffered and deterministic: field
//! order comes from the struct definitions and floats are emitted by
//! serde_json's shortest-round-trip formatter, so identical sessions
//! serialize to identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::logs::records::SessionRecord;
use crate::num::Real;

/// Writes sessions to `path`, one JSON object per line.
pub fn write_log<T: Real>(path: &Path, sessions: &[SessionRecord<T>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for session in sessions {
        serde_json::to_writer(&mut out, session)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSONL session log. Blank lines are skipped; a malformed line
/// fails with its 1-based line number.
pub fn read_log<T: Real>(path: &Path) -> Result<Vec<SessionRecord<T>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut sessions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let session =
            serde_json::from_str(&line).map_err(|source| Error::Parse { line: idx + 1, source })?;
        sessions.push(session);
    }
    Ok(sessions)
}
