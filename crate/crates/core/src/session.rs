//! Logged sessions and replay.
//!
//! [`Session`] wraps an [`Engine`] and writes every command and every emitted
//! event to the event log, in order. [`replay`] rebuilds a session from its
//! log alone and checks that the engine produces the same entries again.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Emitted, Engine, EngineError, SessionPlan};
use crate::log::{parse_log, EventLogEntry, LogError, LogWriter, PLAN_KIND};
use crate::protocol::{Body, ClientCommand, EngineEvent, CLIENT_KINDS};
use crate::record::SessionRecord;
use crate::vclock::VTime;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("replay: {0}")]
    Replay(String),
    #[error("replay diverged from the log at seq {seq}")]
    Divergence { seq: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionOptions {
    pub participant: Option<String>,
    /// Wall clock time recorded in the log header only.
    pub created_unix_ms: u64,
}

#[derive(Serialize, Deserialize)]
struct PlanPayload {
    participant: Option<String>,
    plan: SessionPlan,
}

pub type Sink = Box<dyn Write + Send>;

pub struct Session {
    engine: Engine,
    writer: LogWriter<Sink>,
    entries: Vec<EventLogEntry>,
    participant: Option<String>,
}

impl Session {
    /// Starts the engine and logs header, plan, and opening events. Returns
    /// the opening event entries.
    pub fn start(plan: SessionPlan, opts: SessionOptions, sink: Sink) -> Result<(Self, Vec<EventLogEntry>), SessionError> {
        let day_start = plan.config.clock.day_start;
        let payload = serde_json::to_value(PlanPayload { participant: opts.participant.clone(), plan: plan.clone() })
            .map_err(|e| SessionError::Replay(e.to_string()))?;
        let (engine, opening) = Engine::start(plan)?;
        let writer = LogWriter::create(sink, opts.created_unix_ms, day_start)?;
        let mut s = Session { engine, writer, entries: Vec::new(), participant: opts.participant };
        s.log(PLAN_KIND, payload, 0, day_start)?;
        let out = s.log_events(opening)?;
        Ok((s, out))
    }

    /// A session that keeps its log in memory only.
    pub fn start_in_memory(plan: SessionPlan, opts: SessionOptions) -> Result<(Self, Vec<EventLogEntry>), SessionError> {
        Session::start(plan, opts, Box::new(io::sink()))
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn entries(&self) -> &[EventLogEntry] {
        &self.entries
    }

    fn log(&mut self, kind: &str, payload: serde_json::Value, real_ms: u64, vtime: VTime) -> Result<EventLogEntry, SessionError> {
        let entry = EventLogEntry { kind: kind.to_string(), payload, real_ms, seq: self.writer.next_seq(), vtime };
        self.writer.append(&entry)?;
        self.entries.push(entry.clone());
        Ok(entry)
    }

    fn log_events(&mut self, events: Vec<Emitted>) -> Result<Vec<EventLogEntry>, SessionError> {
        events
            .into_iter()
            .map(|e| {
                let (kind, payload) = Body::Engine(e.event).to_parts().map_err(|e| SessionError::Replay(e.to_string()))?;
                self.log(&kind, payload, e.real_ms, e.vtime)
            })
            .collect()
    }

    /// Logs the command, applies it, and logs what it produced. A command the
    /// engine cannot apply yields a `command_rejected` event rather than an
    /// error, so the log stays a complete account of the session.
    pub fn command(&mut self, cmd: &ClientCommand) -> Result<Vec<EventLogEntry>, SessionError> {
        let (kind, payload) = Body::Client(cmd.clone()).to_parts().map_err(|e| SessionError::Replay(e.to_string()))?;
        let clock = self.engine.clock();
        let (real_ms, vtime) = (clock.elapsed_real_ms(), clock.now());
        self.log(&kind, payload, real_ms, vtime)?;
        let events = match self.engine.handle_command(cmd) {
            Ok(events) => events,
            Err(e) => vec![Emitted {
                real_ms,
                vtime,
                event: EngineEvent::CommandRejected { command: kind, reason: e.code().to_string() },
            }],
        };
        self.log_events(events)
    }

    pub fn advance(&mut self, delta_real_ms: u64) -> Result<Vec<EventLogEntry>, SessionError> {
        let events = self.engine.tick(delta_real_ms);
        self.log_events(events)
    }

    /// Advances to an absolute engine time. No effect while the clock is
    /// held (before the briefing is acknowledged, or when paused).
    pub fn advance_to(&mut self, real_ms: u64) -> Result<Vec<EventLogEntry>, SessionError> {
        let now = self.engine.clock().elapsed_real_ms();
        self.advance(real_ms.saturating_sub(now))
    }

    pub fn is_ended(&self) -> bool {
        self.engine.is_ended()
    }

    /// Aborts the session if it is still running, writes the trailer, and
    /// builds the record.
    pub fn finish(mut self) -> Result<SessionRecord, SessionError> {
        let aborting = self.engine.abort();
        self.log_events(aborting)?;
        let clock = self.engine.clock();
        self.writer.finish(clock.elapsed_real_ms(), clock.now())?;
        Ok(self.record())
    }

    fn record(&self) -> SessionRecord {
        let plan = self.engine.plan();
        let outcomes = self.engine.outcomes();
        let durations: BTreeMap<String, u64> =
            outcomes.iter().filter_map(|o| o.duration_secs.map(|d| (o.task_id.clone(), d))).collect();
        SessionRecord {
            session_number: plan.session_number,
            vrt_level: plan.vrt_level,
            seed: plan.seed,
            participant: self.participant.clone(),
            scored: plan.scored(),
            aborted: self.engine.was_aborted(),
            tasks: plan.tasks().to_vec(),
            rates: self.engine.rates(),
            outcomes,
            durations,
            vit_results: self.engine.vit_results(),
            event_log: self.entries.clone(),
        }
    }
}

/// Rebuilds the record from a log. Commands are re-issued at their logged
/// engine times; the regenerated entries must match the log exactly.
pub fn replay(text: &str) -> Result<SessionRecord, SessionError> {
    let parsed = parse_log(text)?;
    let mut entries = parsed.entries.iter();
    let plan_entry = entries.next().filter(|e| e.kind == PLAN_KIND).ok_or_else(|| SessionError::Replay("missing plan entry".into()))?;
    let PlanPayload { participant, plan } =
        serde_json::from_value(plan_entry.payload.clone()).map_err(|e| SessionError::Replay(format!("plan entry: {e}")))?;
    let opts = SessionOptions { participant, created_unix_ms: parsed.created_unix_ms().unwrap_or(0) };
    let (mut session, _) = Session::start_in_memory(plan, opts)?;
    let mut ended = false;
    for e in entries {
        if CLIENT_KINDS.contains(&e.kind.as_str()) {
            let cmd = match Body::from_parts(&e.kind, e.payload.clone()) {
                Ok(Body::Client(c)) => c,
                _ => return Err(SessionError::Replay(format!("seq {}: unreadable command", e.seq))),
            };
            session.advance_to(e.real_ms)?;
            session.command(&cmd)?;
        } else if e.kind == "session_end" {
            session.advance_to(e.real_ms)?;
            ended = true;
            break;
        }
    }
    if !ended {
        return Err(SessionError::Replay("log has no session_end entry".into()));
    }
    let record = session.finish()?;
    let regenerated = &record.event_log;
    if let Some(seq) = first_difference(regenerated, &parsed.entries) {
        return Err(SessionError::Divergence { seq });
    }
    Ok(record)
}

fn first_difference(a: &[EventLogEntry], b: &[EventLogEntry]) -> Option<u64> {
    let n = a.len().min(b.len());
    (0..n)
        .find(|&i| a[i] != b[i])
        .map(|i| a[i].seq)
        .or_else(|| (a.len() != b.len()).then(|| n as u64 + 1))
}

/// A shareable buffer sink, handy for capturing a log in memory.
#[derive(Clone, Default)]
pub struct SharedBuf(pub std::sync::Arc<std::sync::Mutex<Vec<u8>>>);

impl SharedBuf {
    pub fn text(&self) -> String {
        String::from_utf8(self.0.lock().expect("buffer lock").clone()).expect("log is utf-8")
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.lock().expect("buffer lock").write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Helper for payload-free lookups in tests and tools.
pub fn entries_of_kind<'a>(entries: &'a [EventLogEntry], kind: &'a str) -> impl Iterator<Item = &'a EventLogEntry> {
    entries.iter().filter(move |e| e.kind == kind)
}
