//! Achievement rates per participant and session.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::engine::{FIRST_VRT_SESSION, SESSIONS};
use crate::record::{AchievementRates, Category, Rate, SessionRecord};

pub const ANONYMOUS: &str = "anonymous";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantAchievement {
    pub participant_id: String,
    pub sessions: BTreeMap<u8, AchievementRates>,
    /// Scored sessions with no record. Never filled in.
    pub missing: Vec<u8>,
    /// Counts summed over all present sessions.
    pub pooled: AchievementRates,
}

impl ParticipantAchievement {
    pub fn pooled_fraction(&self, category: Category) -> Option<f64> {
        self.pooled.get(category).map(|r| r.fraction())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AchievementTable {
    pub participants: Vec<ParticipantAchievement>,
}

fn add(a: Option<Rate>, b: Option<Rate>) -> Option<Rate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(Rate { achieved: x.achieved + y.achieved, total: x.total + y.total }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn pool(all: impl Iterator<Item = AchievementRates>) -> AchievementRates {
    all.fold(
        AchievementRates { total: None, regular: None, irregular: None, time_based: None, event_based: None },
        |acc, r| AchievementRates {
            total: add(acc.total, r.total),
            regular: add(acc.regular, r.regular),
            irregular: add(acc.irregular, r.irregular),
            time_based: add(acc.time_based, r.time_based),
            event_based: add(acc.event_based, r.event_based),
        },
    )
}

/// Groups scored records by participant. Unscored sessions are skipped; a
/// second record for the same participant and session is an error.
pub fn achievement_table(records: &[SessionRecord]) -> Result<AchievementTable, AnalyticsError> {
    let mut by: BTreeMap<String, BTreeMap<u8, AchievementRates>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.scored) {
        let id = r.participant.clone().unwrap_or_else(|| ANONYMOUS.to_string());
        let rates = r.rates.ok_or_else(|| AnalyticsError::Input(format!("{id} session {} has no rates", r.session_number)))?;
        if by.entry(id.clone()).or_default().insert(r.session_number, rates).is_some() {
            return Err(AnalyticsError::Input(format!("{id} has two records for session {}", r.session_number)));
        }
    }
    let participants = by
        .into_iter()
        .map(|(participant_id, sessions)| ParticipantAchievement {
            missing: (FIRST_VRT_SESSION..=SESSIONS).filter(|s| !sessions.contains_key(s)).collect(),
            pooled: pool(sessions.values().copied()),
            participant_id,
            sessions,
        })
        .collect();
    Ok(AchievementTable { participants })
}

/// The smallest `k` with `k / n` within `tol` of `value`, if any.
pub fn reconstruct_count(value: f64, n: u32, tol: f64) -> Option<u32> {
    (0..=n).find(|k| (f64::from(*k) / f64::from(n) - value).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pooling_sums_counts() {
        let r = |a, t| Some(Rate { achieved: a, total: t });
        let s5 = AchievementRates { total: r(6, 7), regular: r(5, 5), irregular: r(1, 2), time_based: r(3, 3), event_based: r(3, 4) };
        let s6 = AchievementRates { total: r(6, 8), regular: r(4, 5), irregular: r(2, 3), time_based: r(2, 4), event_based: r(4, 4) };
        let p = pool([s5, s6].into_iter());
        assert_eq!(p.total, r(12, 15));
        assert_eq!(p.irregular, r(3, 5));
    }

    #[test]
    fn counts_reconstruct() {
        assert_eq!(reconstruct_count(0.286, 7, 0.0005), Some(2));
        assert_eq!(reconstruct_count(0.889, 9, 0.0005), Some(8));
        assert_eq!(reconstruct_count(0.5, 7, 0.0005), None);
    }
}
