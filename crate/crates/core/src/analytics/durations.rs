//! Remember-to-execute durations and per-task min-max normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Parses `mm:ss` (minutes may exceed 59) into seconds.
pub fn parse_mmss(s: &str) -> Result<i64, AnalyticsError> {
    let bad = || AnalyticsError::Duration(s.to_string());
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (m, sec) = body.split_once(':').ok_or_else(bad)?;
    let m: i64 = m.parse().map_err(|_| bad())?;
    let sec: i64 = sec.parse().map_err(|_| bad())?;
    if sec >= 60 || m < 0 || sec < 0 {
        return Err(bad());
    }
    let total = m * 60 + sec;
    Ok(if neg { -total } else { total })
}

pub fn format_mmss(secs: u64) -> String {
    format!("{:02}:{:02}", secs / 60, secs % 60)
}

/// Min-max normalization of one column. A column whose values are all equal
/// (including a single value) maps to zeros.
pub fn normalize_column(values: &[i64]) -> Result<Vec<f64>, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::EmptyColumn);
    }
    if let Some(&v) = values.iter().find(|v| **v < 0) {
        return Err(AnalyticsError::NegativeDuration(v));
    }
    let min = *values.iter().min().expect("non-empty");
    let max = *values.iter().max().expect("non-empty");
    if max == min {
        return Ok(vec![0.0; values.len()]);
    }
    let span = (max - min) as f64;
    Ok(values.iter().map(|v| (v - min) as f64 / span).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedDuration {
    pub task_id: String,
    pub participant_id: String,
    pub seconds: u64,
    /// `mm:ss` display form.
    pub duration: String,
    pub normalized: f64,
}

/// Normalizes every task column independently. Columns map task id to
/// `(participant, seconds)` cells.
pub fn normalize_durations(
    columns: &BTreeMap<String, Vec<(String, i64)>>,
) -> Result<Vec<NormalizedDuration>, AnalyticsError> {
    let mut out = Vec::new();
    for (task, cells) in columns {
        let values: Vec<i64> = cells.iter().map(|(_, s)| *s).collect();
        let normalized = normalize_column(&values).map_err(|e| match e {
            AnalyticsError::EmptyColumn => AnalyticsError::Input(format!("task {task} has no durations")),
            other => other,
        })?;
        for ((participant, secs), n) in cells.iter().zip(normalized) {
            out.push(NormalizedDuration {
                task_id: task.clone(),
                participant_id: participant.clone(),
                seconds: *secs as u64,
                duration: format_mmss(*secs as u64),
                normalized: n,
            });
        }
    }
    Ok(out)
}

pub fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
