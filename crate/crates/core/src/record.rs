//! Finalized session results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::log::EventLogEntry;
use crate::taskmodel::{CueType, OutcomeStatus, PmTask, Regularity, TaskOutcome};
use crate::vit::VitLevelResult;

/// `achieved` out of `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub achieved: u32,
    pub total: u32,
}

impl Rate {
    pub fn fraction(&self) -> f64 {
        f64::from(self.achieved) / f64::from(self.total)
    }

    /// Three-decimal display value.
    pub fn rounded(&self) -> f64 {
        (self.fraction() * 1000.0).round() / 1000.0
    }

    fn of<'a>(pairs: impl Iterator<Item = (&'a PmTask, &'a TaskOutcome)>) -> Option<Rate> {
        let (mut achieved, mut total) = (0, 0);
        for (_, o) in pairs {
            total += 1;
            achieved += u32::from(o.achieved);
        }
        (total > 0).then_some(Rate { achieved, total })
    }
}

/// Achievement per task category. A category with no tasks has no rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievementRates {
    pub total: Option<Rate>,
    pub regular: Option<Rate>,
    pub irregular: Option<Rate>,
    pub time_based: Option<Rate>,
    pub event_based: Option<Rate>,
}

impl AchievementRates {
    pub fn compute(tasks: &[PmTask], outcomes: &[TaskOutcome]) -> Self {
        let pairs = || {
            tasks.iter().filter_map(|t| outcomes.iter().find(|o| o.task_id == t.id).map(|o| (t, o)))
        };
        AchievementRates {
            total: Rate::of(pairs()),
            regular: Rate::of(pairs().filter(|(t, _)| t.regularity == Regularity::Regular)),
            irregular: Rate::of(pairs().filter(|(t, _)| t.regularity == Regularity::Irregular)),
            time_based: Rate::of(pairs().filter(|(t, _)| t.cue_type == CueType::TimeBased)),
            event_based: Rate::of(pairs().filter(|(t, _)| t.cue_type == CueType::EventBased)),
        }
    }

    pub fn get(&self, category: Category) -> Option<Rate> {
        match category {
            Category::Total => self.total,
            Category::Regular => self.regular,
            Category::Irregular => self.irregular,
            Category::TimeBased => self.time_based,
            Category::EventBased => self.event_based,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Total,
    Regular,
    Irregular,
    TimeBased,
    EventBased,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Total, Category::Regular, Category::Irregular, Category::TimeBased, Category::EventBased];

    pub fn label(self) -> &'static str {
        match self {
            Category::Total => "Total",
            Category::Regular => "Regular",
            Category::Irregular => "Irregular",
            Category::TimeBased => "Time",
            Category::EventBased => "Event",
        }
    }
}

/// Everything a finished session produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_number: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vrt_level: Option<u8>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    pub scored: bool,
    pub aborted: bool,
    pub tasks: Vec<PmTask>,
    pub outcomes: Vec<TaskOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<AchievementRates>,
    /// Virtual seconds from presentation to execution, executed tasks only.
    pub durations: BTreeMap<String, u64>,
    pub vit_results: Vec<VitLevelResult>,
    pub event_log: Vec<EventLogEntry>,
}

impl SessionRecord {
    pub fn outcome(&self, task_id: &str) -> Option<&TaskOutcome> {
        self.outcomes.iter().find(|o| o.task_id == task_id)
    }

    pub fn status_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for o in &self.outcomes {
            let key = serde_json::to_value(o.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            *m.entry(key).or_insert(0) += 1;
        }
        m
    }

    pub fn achieved_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.achieved).count()
    }

    pub fn missed_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.status == OutcomeStatus::Missed).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_matches_three_decimals() {
        assert_eq!(Rate { achieved: 2, total: 7 }.rounded(), 0.286);
        assert_eq!(Rate { achieved: 6, total: 7 }.rounded(), 0.857);
        assert_eq!(Rate { achieved: 7, total: 9 }.rounded(), 0.778);
        assert_eq!(Rate { achieved: 8, total: 8 }.rounded(), 1.0);
    }
}
