//! Deterministic prospective-memory training engine: virtual clock, task
//! model, simulated day, session logs, scripted agents, and analytics.

pub mod agents;
pub mod analytics;
pub mod content;
pub mod engine;
pub mod log;
pub mod protocol;
pub mod record;
pub mod server;
pub mod session;
pub mod sweep;
pub mod taskmodel;
pub mod vclock;
pub mod vit;
pub mod world;

pub use content::Content;
pub use engine::{Engine, EngineError, SessionPlan};
pub use protocol::{ClientCommand, EngineEvent};
pub use record::{AchievementRates, Category, Rate, SessionRecord};
pub use session::{replay, Session, SessionError, SessionOptions};
pub use taskmodel::{CueType, DayPlan, OutcomeStatus, PmTask, Regularity, TaskOutcome};
pub use vclock::{ClockConfig, VTime, VirtualClock};
pub use world::WorldModel;
