//! Parameter sweeps over agent policies.
//!
//! A sweep spec names one policy parameter and a range, e.g.
//! `retention:p=0.5..1.0:step0.1` or
//! `clock_checker:period=15..90:step15`. Extra fixed parameters may follow
//! the range: `retention:p=0.5..1.0,bonus=off:step0.1`.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::agents::{run_program, AgentError, PolicyKind};
use crate::content::Content;
use crate::record::{Category, SessionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub policy: String,
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    /// Fixed `key=value` pairs appended to every cell.
    pub rest: Vec<String>,
}

fn spec_error(spec: &str, reason: &str) -> AgentError {
    AgentError::Spec { spec: spec.to_string(), reason: reason.to_string() }
}

impl FromStr for SweepSpec {
    type Err = AgentError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |r: &str| spec_error(spec, r);
        let mut parts = spec.split(':');
        let policy = parts.next().filter(|p| !p.is_empty()).ok_or_else(|| bad("missing policy"))?;
        let range = parts.next().ok_or_else(|| bad("missing name=from..to"))?;
        let step = parts
            .next()
            .and_then(|s| s.strip_prefix("step"))
            .ok_or_else(|| bad("missing stepN"))?
            .parse::<f64>()
            .map_err(|_| bad("step is not a number"))?;
        if parts.next().is_some() {
            return Err(bad("too many ':' sections"));
        }
        let mut fields = range.split(',');
        let (param, span) = fields.next().and_then(|f| f.split_once('=')).ok_or_else(|| bad("range looks like name=from..to"))?;
        let (from, to) = span.split_once("..").ok_or_else(|| bad("range looks like from..to"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("range bound is not a number"));
        let (from, to) = (num(from)?, num(to)?);
        if !step.is_finite() || step <= 0.0 || to < from {
            return Err(bad("need from <= to and a positive step"));
        }
        Ok(SweepSpec {
            policy: policy.to_string(),
            param: param.trim().to_string(),
            from,
            to,
            step,
            rest: fields.map(str::to_string).collect(),
        })
    }
}

impl SweepSpec {
    /// Values from `from` to `to` inclusive. Computed by index so that
    /// decimal steps do not drift.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((self.from + i as f64 * self.step) * 1e9).round() / 1e9).collect()
    }

    pub fn cells(&self) -> Result<Vec<PolicyKind>, AgentError> {
        self.values()
            .into_iter()
            .map(|v| {
                let mut args = vec![format!("{}={v}", self.param)];
                args.extend(self.rest.iter().cloned());
                format!("{}:{}", self.policy, args.join(",")).parse()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub policy: String,
    pub sessions: usize,
    /// Mean of per-session achievement fractions, by category.
    pub means: BTreeMap<Category, f64>,
}

/// Per-category mean of the session fractions. Sessions without tasks in a
/// category do not count toward that mean.
pub fn summarize(policy: &PolicyKind, records: &[SessionRecord]) -> SweepCell {
    let mut sums: BTreeMap<Category, (f64, usize)> = BTreeMap::new();
    for r in records {
        for c in Category::ALL {
            if let Some(rate) = r.rates.and_then(|x| x.get(c)) {
                let e = sums.entry(c).or_default();
                e.0 += rate.fraction();
                e.1 += 1;
            }
        }
    }
    SweepCell {
        policy: policy.to_string(),
        sessions: records.len(),
        means: sums.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect(),
    }
}

/// Sessions 5-8 for seeds `0..seeds`.
pub fn run_cell(content: &Content, policy: PolicyKind, seeds: u64) -> Result<Vec<SessionRecord>, AgentError> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        out.extend(run_program(content, policy, seed)?);
    }
    Ok(out)
}

/// Runs every cell on its own thread; results keep the cell order.
pub fn run_sweep(content: &Content, spec: &SweepSpec, seeds: u64) -> Result<Vec<SweepCell>, AgentError> {
    let cells = spec.cells()?;
    thread::scope(|s| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&k| s.spawn(move || run_cell(content, k, seeds).map(|r| summarize(&k, &r))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_form() {
        let s: SweepSpec = "retention:p=0.5..1.0:step0.1".parse().unwrap();
        assert_eq!(s.values(), [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        let cells = s.cells().unwrap();
        assert_eq!(cells[1], PolicyKind::Retention { p_retain: 0.6, repetition_bonus: Some(0.5) });
        let s: SweepSpec = "retention:p=0..1,bonus=off:step0.5".parse().unwrap();
        assert_eq!(s.cells().unwrap()[2], PolicyKind::Retention { p_retain: 1.0, repetition_bonus: None });
        let s: SweepSpec = "clock_checker:period=15..90:step15".parse().unwrap();
        assert_eq!(s.cells().unwrap().len(), 6);
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in ["retention", "retention:p=0.5..1.0", "retention:p=1..0:step0.1", "retention:p=0..1:step0", "retention:p=0..2:step1"] {
            let parsed = bad.parse::<SweepSpec>().and_then(|s| s.cells());
            assert!(parsed.is_err(), "{bad}");
        }
    }
}
