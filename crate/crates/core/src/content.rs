//! Content bundle: world, task catalog, word bank, and plan configuration.
//!
//! Defaults are compiled in; a content directory with the same layout
//! (`world/`, `catalog/`, `wordbank/`, `plans/`) overrides them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taskmodel::{LevelMix, TaskCatalog, TaskError};
use crate::vclock::{ClockConfig, ClockError};
use crate::vit::{VitError, WordBank, DEFAULT_FOILS, DEFAULT_ITEMS_PER_LEVEL};
use crate::world::{load_world, WorldError, WorldModel};

pub const DEFAULT_WORLD: &str = include_str!("../../../content/world/default.world.json");
pub const DEFAULT_CATALOG: &str = include_str!("../../../content/catalog/default.catalog.json");
pub const FIXED_EVENT_TASKS: &str = include_str!("../../../content/catalog/fixed_event_tasks.json");
pub const DEFAULT_WORD_BANK: &str = include_str!("../../../content/wordbank/default.wordbank.json");
pub const DEFAULT_PLAN: &str = include_str!("../../../content/plans/default.plan.json");

pub const DEFAULT_REMINDER: &str = "Oops, it's time for your scheduled task.";

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("world: {0}")]
    World(#[from] WorldError),
    #[error("catalog: {0}")]
    Catalog(#[from] TaskError),
    #[error("word bank: {0}")]
    WordBank(#[from] VitError),
    #[error("plan file: {0}")]
    Plan(String),
    #[error("clock: {0}")]
    Clock(#[from] ClockError),
}

/// Tunables read from the plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub clock: ClockConfig,
    pub level_mix: LevelMix,
    pub reminder_message: String,
    pub vit_items_per_level: usize,
    pub vit_foils: usize,
    pub start_location: String,
    pub home_area: String,
    pub tutorial_script: Vec<String>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            clock: ClockConfig::default(),
            level_mix: LevelMix::default(),
            reminder_message: DEFAULT_REMINDER.to_string(),
            vit_items_per_level: DEFAULT_ITEMS_PER_LEVEL,
            vit_foils: DEFAULT_FOILS,
            start_location: "living_room".to_string(),
            home_area: "home".to_string(),
            tutorial_script: vec![
                "Watch the introduction video about the simulated day.".to_string(),
                "Practice the daily tasks below; this day is not scored.".to_string(),
            ],
        }
    }
}

impl PlanConfig {
    pub fn parse(text: &str) -> Result<Self, ContentError> {
        let cfg: PlanConfig = serde_json::from_str(text).map_err(|e| ContentError::Plan(e.to_string()))?;
        cfg.clock.validate()?;
        if cfg.vit_foils < 2 {
            return Err(ContentError::Plan("vit_foils must be at least 2".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct Content {
    pub world: WorldModel,
    pub catalog: TaskCatalog,
    pub word_bank: WordBank,
    pub config: PlanConfig,
}

pub fn default_world() -> Result<WorldModel, ContentError> {
    Ok(load_world(DEFAULT_WORLD)?)
}

/// Regular tasks, the irregular time-based pool, and the six fixed event tasks.
pub fn default_catalog() -> Result<TaskCatalog, ContentError> {
    Ok(TaskCatalog::merge([
        TaskCatalog::parse(DEFAULT_CATALOG)?,
        TaskCatalog::parse(FIXED_EVENT_TASKS)?,
    ])?)
}

pub fn default_word_bank() -> Result<WordBank, ContentError> {
    Ok(WordBank::parse(DEFAULT_WORD_BANK)?)
}

impl Content {
    pub fn defaults() -> Result<Self, ContentError> {
        Content::assemble(default_world()?, default_catalog()?, default_word_bank()?, PlanConfig::parse(DEFAULT_PLAN)?)
    }

    /// Cross-validates the pieces: catalog against world and clock, start
    /// location against world.
    pub fn assemble(
        world: WorldModel,
        catalog: TaskCatalog,
        word_bank: WordBank,
        config: PlanConfig,
    ) -> Result<Self, ContentError> {
        catalog.validate(&world, &config.clock)?;
        if !world.has_location(&config.start_location) {
            return Err(ContentError::Plan(format!("unknown start location {:?}", config.start_location)));
        }
        if !world.areas().iter().any(|a| a.id == config.home_area) {
            return Err(ContentError::Plan(format!("unknown home area {:?}", config.home_area)));
        }
        Ok(Content { world, catalog, word_bank, config })
    }

    /// Loads a content directory. Every `*.json` under `catalog/` is merged.
    pub fn load_dir(dir: &Path) -> Result<Self, ContentError> {
        Content::load(&ContentPaths { dir: Some(dir.to_path_buf()), ..ContentPaths::default() })
    }

    /// Each part comes from its explicit path, else from the directory, else
    /// from the bundled defaults.
    pub fn load(paths: &ContentPaths) -> Result<Self, ContentError> {
        let in_dir = |rel: &str| paths.dir.as_ref().map(|d| d.join(rel));
        let world = match paths.world.clone().or_else(|| in_dir("world/default.world.json")) {
            Some(p) => load_world(&read(&p)?)?,
            None => default_world()?,
        };
        let catalogs = match (&paths.catalogs[..], &paths.dir) {
            ([], Some(d)) => catalog_files(&d.join("catalog"))?,
            (list, _) => list.to_vec(),
        };
        let catalog = if catalogs.is_empty() {
            default_catalog()?
        } else {
            let parts = catalogs
                .iter()
                .map(|p| Ok(TaskCatalog::parse(&read(p)?)?))
                .collect::<Result<Vec<_>, ContentError>>()?;
            TaskCatalog::merge(parts)?
        };
        let word_bank = match paths.word_bank.clone().or_else(|| in_dir("wordbank/default.wordbank.json")) {
            Some(p) => WordBank::parse(&read(&p)?)?,
            None => default_word_bank()?,
        };
        let config = match paths.plan.clone().or_else(|| in_dir("plans/default.plan.json")) {
            Some(p) => PlanConfig::parse(&read(&p)?)?,
            None => PlanConfig::parse(DEFAULT_PLAN)?,
        };
        Content::assemble(world, catalog, word_bank, config)
    }
}

/// Where to read content from; unset parts fall back as in [`Content::load`].
#[derive(Debug, Clone, Default)]
pub struct ContentPaths {
    pub dir: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub catalogs: Vec<PathBuf>,
    pub word_bank: Option<PathBuf>,
    pub plan: Option<PathBuf>,
}

pub fn catalog_files(dir: &Path) -> Result<Vec<PathBuf>, ContentError> {
    let entries = fs::read_dir(dir).map_err(|source| ContentError::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn read(path: &Path) -> Result<String, ContentError> {
    fs::read_to_string(path).map_err(|source| ContentError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = Content::defaults().unwrap();
        assert_eq!(c.config, PlanConfig::default());
        assert_eq!(c.catalog.tasks.len(), 22);
    }

    #[test]
    fn content_dir_matches_compiled_defaults() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../content");
        let c = Content::load_dir(&dir).unwrap();
        let d = Content::defaults().unwrap();
        assert_eq!(c.world, d.world);
        assert_eq!(c.config, d.config);
        assert_eq!(c.catalog.tasks.len(), d.catalog.tasks.len());
    }

    #[test]
    fn bad_plan_rejected() {
        assert!(PlanConfig::parse(r#"{"clock":{"compression_factor":0,"day_start":390,"day_end":1350}}"#).is_err());
        assert!(PlanConfig::parse("{").is_err());
    }
}
