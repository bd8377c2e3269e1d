//! `.pmtlog` event logs.
//!
//! One canonical JSON object per line. Line 0 is a header carrying the wall
//! clock creation time; everything after it is deterministic. The last line
//! holds a SHA-256 over every line between header and trailer, so two runs
//! with the same inputs produce identical files apart from the header.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::vclock::VTime;

pub const LOG_FORMAT: &str = "pmtlog/1";
pub const LOG_EXTENSION: &str = "pmtlog";
pub const HEADER_KIND: &str = "header";
pub const PLAN_KIND: &str = "plan";
pub const CHECKSUM_KIND: &str = "checksum";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("entry seq {got} out of order, expected {expected}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("entry seq {seq} moves virtual time back from {previous} to {vtime}")]
    TimeReversal { seq: u64, previous: VTime, vtime: VTime },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("log is truncated; last good seq is {last_seq}")]
    Truncated { last_seq: u64 },
    #[error("checksum mismatch: trailer says {expected}, content hashes to {actual}")]
    Checksum { expected: String, actual: String },
    #[error("log header missing or not {LOG_FORMAT}")]
    Header,
    #[error("log already finished")]
    Finished,
}

/// Field order is alphabetical so the serialized line is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub kind: String,
    pub payload: Value,
    pub real_ms: u64,
    pub seq: u64,
    pub vtime: VTime,
}

impl EventLogEntry {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log entries always serialize")
    }
}

/// Appends entries to a sink, enforcing order and accumulating the checksum.
pub struct LogWriter<W: Write> {
    sink: W,
    hasher: Sha256,
    next_seq: u64,
    last_vtime: Option<VTime>,
    finished: bool,
}

impl<W: Write> LogWriter<W> {
    /// Writes the header line (seq 0).
    pub fn create(mut sink: W, created_unix_ms: u64, day_start: VTime) -> Result<Self, LogError> {
        let header = EventLogEntry {
            kind: HEADER_KIND.to_string(),
            payload: json!({ "format": LOG_FORMAT, "created_unix_ms": created_unix_ms }),
            real_ms: 0,
            seq: 0,
            vtime: day_start,
        };
        writeln!(sink, "{}", header.to_line())?;
        Ok(LogWriter { sink, hasher: Sha256::new(), next_seq: 1, last_vtime: None, finished: false })
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn append(&mut self, entry: &EventLogEntry) -> Result<(), LogError> {
        if self.finished {
            return Err(LogError::Finished);
        }
        if entry.seq != self.next_seq {
            return Err(LogError::OutOfOrder { expected: self.next_seq, got: entry.seq });
        }
        if let Some(previous) = self.last_vtime.filter(|p| entry.vtime < *p) {
            return Err(LogError::TimeReversal { seq: entry.seq, previous, vtime: entry.vtime });
        }
        let line = entry.to_line();
        writeln!(self.sink, "{line}")?;
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        self.next_seq += 1;
        self.last_vtime = Some(entry.vtime);
        Ok(())
    }

    /// Writes the checksum trailer and flushes. A log with no entries after
    /// the header gets no trailer.
    pub fn finish(&mut self, real_ms: u64, vtime: VTime) -> Result<(), LogError> {
        if self.finished {
            return Err(LogError::Finished);
        }
        self.finished = true;
        if self.next_seq > 1 {
            let digest = hex::encode(self.hasher.clone().finalize());
            let trailer = EventLogEntry {
                kind: CHECKSUM_KIND.to_string(),
                payload: json!({ "sha256": digest }),
                real_ms,
                seq: self.next_seq,
                vtime,
            };
            writeln!(self.sink, "{}", trailer.to_line())?;
        }
        self.sink.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// A parsed and verified log.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub header: EventLogEntry,
    /// Entries between header and trailer.
    pub entries: Vec<EventLogEntry>,
    pub checksum: String,
}

impl ParsedLog {
    pub fn created_unix_ms(&self) -> Option<u64> {
        self.header.payload.get("created_unix_ms").and_then(Value::as_u64)
    }
}

/// Parses a complete log, checking sequence, trailer, and checksum.
pub fn parse_log(text: &str) -> Result<ParsedLog, LogError> {
    let lines: Vec<&str> = text.lines().collect();
    let parse = |i: usize, l: &str| {
        serde_json::from_str::<EventLogEntry>(l).map_err(|e| LogError::Parse { line: i + 1, reason: e.to_string() })
    };
    let Some(first) = lines.first() else {
        return Err(LogError::Header);
    };
    let header = parse(0, first)?;
    if header.seq != 0 || header.kind != HEADER_KIND || header.payload.get("format") != Some(&json!(LOG_FORMAT)) {
        return Err(LogError::Header);
    }
    let mut entries = Vec::new();
    let mut hasher = Sha256::new();
    let mut last_seq = 0;
    for (i, line) in lines.iter().enumerate().skip(1) {
        let entry = match parse(i, line) {
            Ok(e) => e,
            Err(_) if i + 1 == lines.len() => return Err(LogError::Truncated { last_seq }),
            Err(e) => return Err(e),
        };
        if entry.seq != last_seq + 1 {
            return Err(LogError::OutOfOrder { expected: last_seq + 1, got: entry.seq });
        }
        if entry.kind == CHECKSUM_KIND {
            if i + 1 != lines.len() {
                return Err(LogError::Parse { line: i + 1, reason: "checksum before end of log".into() });
            }
            let expected = entry.payload.get("sha256").and_then(Value::as_str).unwrap_or_default().to_string();
            let actual = hex::encode(hasher.finalize());
            if expected != actual {
                return Err(LogError::Checksum { expected, actual });
            }
            return Ok(ParsedLog { header, entries, checksum: actual });
        }
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
        last_seq = entry.seq;
        entries.push(entry);
    }
    Err(LogError::Truncated { last_seq })
}

/// The log text minus the header line, for comparing runs.
pub fn without_header(text: &str) -> &str {
    text.split_once('\n').map(|(_, rest)| rest).unwrap_or("")
}
