//! Achievement tables, correlations, duration normalization, and
//! questionnaire scoring.

pub mod achievement;
pub mod durations;
pub mod fixtures;
pub mod questionnaire;
pub mod report;
pub mod stats;

use thiserror::Error;

pub use achievement::{achievement_table, AchievementTable, ParticipantAchievement};
pub use durations::{format_mmss, normalize_column, normalize_durations, parse_mmss, NormalizedDuration};
pub use fixtures::{check_fixtures, FixtureCheck, Fixtures};
pub use questionnaire::{score_questionnaire, Group, Instrument, QuestionnaireResponse};
pub use report::{analyze, render_text, AnalyzeInputs, ParticipantScores, Report};
pub use stats::{correlate, fisher_ci, p_value, pearson, CorrelationResult, StatsError};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("bad duration {0:?}, expected mm:ss")]
    Duration(String),
    #[error("negative duration {0} s")]
    NegativeDuration(i64),
    #[error("empty duration column")]
    EmptyColumn,
    #[error("{participant}: expected {expected} items, got {got}")]
    ItemCount { participant: String, expected: usize, got: usize },
    #[error("{participant}: item {item} = {value} is outside {lo}..={hi}")]
    ItemRange { participant: String, item: usize, value: i32, lo: i32, hi: i32 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Input(String),
}
