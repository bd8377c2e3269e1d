use std::collections::BTreeMap;

use pmt_core::agents::{run_with, Agent, AgentPolicy, PolicyKind};
use pmt_core::log::{parse_log, LogError};
use pmt_core::session::SharedBuf;
use pmt_core::{replay, Content, SessionError, SessionOptions, SessionPlan};

fn logged(session: u8, kind: &str, seed: u64) -> (String, pmt_core::SessionRecord) {
    let content = Content::defaults().unwrap();
    let plan = SessionPlan::build(session, &content, seed).unwrap();
    let factor = plan.config.clock.compression_factor;
    let policy = AgentPolicy::new(kind.parse::<PolicyKind>().unwrap(), seed).unwrap();
    let mut agent = Agent::new(policy, BTreeMap::new(), factor);
    let buf = SharedBuf::default();
    let opts = SessionOptions { participant: Some("x".into()), created_unix_ms: 1_700_000_000_000 };
    let record = run_with(plan, &mut agent, opts, Box::new(buf.clone())).unwrap();
    (buf.text(), record)
}

#[test]
fn every_session_replays_to_its_record() {
    for session in 1..=8 {
        for kind in ["perfect", "retention:p=0.6", "clock_checker:period=30"] {
            let (log, record) = logged(session, kind, u64::from(session) * 7);
            assert_eq!(replay(&log).unwrap(), record, "session {session} {kind}");
        }
    }
}

#[test]
fn edited_log_fails_checksum() {
    let (log, _) = logged(6, "immediate", 1);
    let edited = log.replacen("\"arrived\"", "\"arrivee\"", 1);
    assert_ne!(edited, log);
    assert!(matches!(parse_log(&edited), Err(LogError::Checksum { .. })));
    assert!(replay(&edited).is_err());
}

#[test]
fn truncated_log_is_reported() {
    let (log, _) = logged(5, "perfect", 2);
    let lines: Vec<&str> = log.lines().collect();
    let cut = lines[..lines.len() - 1].join("\n");
    assert!(matches!(parse_log(&cut), Err(LogError::Truncated { .. })));
    assert!(matches!(replay(&cut), Err(SessionError::Log(LogError::Truncated { .. }))));
}

#[test]
fn header_is_the_only_difference_between_runs() {
    let (a, _) = logged(7, "retention:p=0.8", 5);
    let (b, _) = logged(7, "retention:p=0.8", 5);
    assert_eq!(a, b);
    let (c, _) = logged(7, "retention:p=0.8", 6);
    assert_ne!(a, c);
}
