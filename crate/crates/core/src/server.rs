//! Single-session WebSocket endpoint. One text frame per protocol line.
//!
//! The engine clock follows the wall clock (optionally sped up). A client
//! that drops can reconnect and send `join` with `resume_from` to receive
//! every engine message it missed.

use std::io::{self, ErrorKind};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use tungstenite::{Message, WebSocket};

use crate::engine::SessionPlan;
use crate::log::{EventLogEntry, CHECKSUM_KIND, HEADER_KIND, PLAN_KIND};
use crate::protocol::{decode, encode, Body, ClientCommand, ProtocolMessage, SeqGuard, CLIENT_KINDS};
use crate::record::SessionRecord;
use crate::session::{Session, SessionError, SessionOptions, Sink};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    /// Engine milliseconds per wall-clock millisecond.
    pub time_scale: u64,
    /// How long to wait for a frame before advancing the clock again.
    pub poll: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions { time_scale: 1, poll: Duration::from_millis(20) }
    }
}

struct Client {
    ws: WebSocket<TcpStream>,
    joined: bool,
    sent: u64,
    guard: SeqGuard,
}

fn is_engine_entry(e: &EventLogEntry) -> bool {
    ![HEADER_KIND, PLAN_KIND, CHECKSUM_KIND].contains(&e.kind.as_str()) && !CLIENT_KINDS.contains(&e.kind.as_str())
}

fn frame(e: &EventLogEntry) -> Option<String> {
    let body = Body::from_parts(&e.kind, e.payload.clone()).ok()?;
    encode(&ProtocolMessage { seq: e.seq, body }).ok()
}

fn accept(listener: &TcpListener, poll: Duration) -> Result<Option<Client>, ServeError> {
    match listener.accept() {
        Ok((stream, _)) => {
            stream.set_nonblocking(false)?;
            // A failed handshake drops that connection, not the session.
            let Ok(ws) = tungstenite::accept(stream) else {
                return Ok(None);
            };
            ws.get_ref().set_read_timeout(Some(poll))?;
            Ok(Some(Client { ws, joined: false, sent: 0, guard: SeqGuard::default() }))
        }
        Err(e) if e.kind() == ErrorKind::WouldBlock => Ok(None),
        Err(e) => Err(e.into()),
    }
}

enum Inbound {
    Command(ClientCommand),
    /// Nothing usable arrived within the poll. Malformed and out-of-order
    /// frames are dropped here.
    Idle,
    Closed,
}

impl Client {
    /// Sends every engine entry after `self.sent`. False once the
    /// connection is gone.
    fn flush(&mut self, entries: &[EventLogEntry]) -> bool {
        if !self.joined {
            return true;
        }
        let from = self.sent;
        for e in entries.iter().filter(|e| e.seq > from && is_engine_entry(e)) {
            if let Some(text) = frame(e) {
                if self.ws.send(Message::text(text)).is_err() {
                    return false;
                }
            }
            self.sent = e.seq;
        }
        self.ws.flush().is_ok()
    }

    fn receive(&mut self) -> Inbound {
        match self.ws.read() {
            Ok(Message::Text(t)) => match decode(t.as_str()) {
                Ok(ProtocolMessage { seq, body: Body::Client(cmd) }) if self.guard.accept(seq) => Inbound::Command(cmd),
                _ => Inbound::Idle,
            },
            Ok(_) => Inbound::Idle,
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Inbound::Idle,
            Err(_) => Inbound::Closed,
        }
    }
}

/// Runs one session to its end, serving whoever is connected, and returns
/// the record. The listener is switched to non-blocking.
pub fn serve(
    listener: TcpListener,
    plan: SessionPlan,
    session_opts: SessionOptions,
    sink: Sink,
    opts: ServeOptions,
) -> Result<SessionRecord, ServeError> {
    listener.set_nonblocking(true)?;
    let (mut session, _) = Session::start(plan, session_opts, sink)?;
    let mut client: Option<Client> = None;
    let mut last = Instant::now();
    loop {
        if client.is_none() {
            client = accept(&listener, opts.poll)?;
            if client.is_none() {
                thread::sleep(opts.poll);
            }
        }
        if let Some(c) = client.as_mut() {
            match c.receive() {
                Inbound::Command(cmd) => {
                    if let ClientCommand::Join { resume_from, .. } = &cmd {
                        c.joined = true;
                        c.sent = resume_from.unwrap_or(0);
                    }
                    session.command(&cmd)?;
                }
                Inbound::Idle => {}
                Inbound::Closed => client = None,
            }
        }
        let now = Instant::now();
        let wall = now.duration_since(last).as_millis() as u64;
        if wall > 0 {
            last = now;
            session.advance(wall.saturating_mul(opts.time_scale))?;
        }
        if let Some(c) = client.as_mut() {
            if !c.flush(session.entries()) {
                client = None;
            }
        }
        if session.is_ended() {
            if let Some(mut c) = client.take() {
                let _ = c.ws.close(None);
                let _ = c.ws.flush();
            }
            return Ok(session.finish()?);
        }
    }
}
