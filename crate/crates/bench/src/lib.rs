//! Shared inputs for the benchmarks.

use pmt_core::agents::{run_session, PolicyKind};
use pmt_core::session::SharedBuf;
use pmt_core::{Content, SessionOptions};

/// A complete session log written by a retention agent.
pub fn recorded_log(content: &Content, session: u8, seed: u64) -> String {
    let buf = SharedBuf::default();
    let kind = PolicyKind::Retention { p_retain: 0.8, repetition_bonus: Some(0.5) };
    run_session(content, kind, session, seed, SessionOptions::default(), Box::new(buf.clone())).expect("agent session runs");
    buf.text()
}

/// Correlated pairs without an RNG dependency.
pub fn paired_scores(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|i| {
            let x = i as f64;
            (x, 0.5 * x + ((i * 7919) % 13) as f64)
        })
        .unzip()
}
