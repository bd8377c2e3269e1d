//! Visual imagery training curriculum.
//!
//! Eight levels progressively withdraw visual support: early levels pair
//! pictured nouns, later ones pair written events with action sentences.
//! Recall is tested by multiple choice so the engine can score itself.

use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ITEMS_PER_LEVEL: usize = 10;
pub const DEFAULT_FOILS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum VitError {
    #[error("level {0} outside 1..=8")]
    BadLevel(u8),
    #[error("level {level} needs {needed} {kind:?} pairs, bank has {available}")]
    InsufficientBank { level: u8, kind: PairKind, needed: usize, available: usize },
    #[error("{0:?} was not among the presented options")]
    NotAnOption(String),
    #[error("no level results to score")]
    Empty,
    #[error("word bank does not parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimulusContent {
    Noun,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimulusMode {
    ImagePlusWord,
    WordOnly,
    ImagePlusSentence,
    SentenceOnly,
}

impl StimulusMode {
    pub fn has_image(self) -> bool {
        matches!(self, StimulusMode::ImagePlusWord | StimulusMode::ImagePlusSentence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseContent {
    Noun,
    Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    ImagePlusWord,
    WordOnly,
    Sentence,
}

impl ResponseMode {
    pub fn has_image(self) -> bool {
        self == ResponseMode::ImagePlusWord
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    NounNoun,
    NounAction,
    EventAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Easy,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPair {
    pub kind: PairKind,
    pub tier: Tier,
    pub cue: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_image: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordBank {
    pub pairs: Vec<WordPair>,
}

impl WordBank {
    pub fn parse(text: &str) -> Result<Self, VitError> {
        serde_json::from_str(text).map_err(|e| VitError::Parse(e.to_string()))
    }
}

/// Presentation recipe for one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSpec {
    pub stimulus_content: StimulusContent,
    pub stimulus_mode: StimulusMode,
    pub response_content: ResponseContent,
    pub response_mode: ResponseMode,
    pub pair_kind: PairKind,
    /// Levels 1 and 2 share presentation modes and differ by pair difficulty.
    pub tier: Option<Tier>,
}

pub fn level_spec(level: u8) -> Result<LevelSpec, VitError> {
    use ResponseContent as RC;
    use ResponseMode as RM;
    use StimulusContent as SC;
    use StimulusMode as SM;
    let (sc, sm, rc, rm, kind, tier) = match level {
        1 => (SC::Noun, SM::ImagePlusWord, RC::Noun, RM::ImagePlusWord, PairKind::NounNoun, Some(Tier::Easy)),
        2 => (SC::Noun, SM::ImagePlusWord, RC::Noun, RM::ImagePlusWord, PairKind::NounNoun, Some(Tier::Hard)),
        3 => (SC::Noun, SM::ImagePlusWord, RC::Noun, RM::WordOnly, PairKind::NounNoun, None),
        4 => (SC::Noun, SM::WordOnly, RC::Noun, RM::WordOnly, PairKind::NounNoun, None),
        5 => (SC::Noun, SM::ImagePlusWord, RC::Action, RM::Sentence, PairKind::NounAction, None),
        6 => (SC::Noun, SM::WordOnly, RC::Action, RM::Sentence, PairKind::NounAction, None),
        7 => (SC::Event, SM::ImagePlusSentence, RC::Action, RM::Sentence, PairKind::EventAction, None),
        8 => (SC::Event, SM::SentenceOnly, RC::Action, RM::Sentence, PairKind::EventAction, None),
        other => return Err(VitError::BadLevel(other)),
    };
    Ok(LevelSpec {
        stimulus_content: sc,
        stimulus_mode: sm,
        response_content: rc,
        response_mode: rm,
        pair_kind: kind,
        tier,
    })
}

/// VIT levels run in each of the first three sessions.
pub fn session_levels(session: u8) -> Option<RangeInclusive<u8>> {
    match session {
        1 => Some(1..=3),
        2 => Some(4..=6),
        3 => Some(7..=8),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitItem {
    pub level: u8,
    pub stimulus_content: StimulusContent,
    pub stimulus_mode: StimulusMode,
    pub response_content: ResponseContent,
    pub response_mode: ResponseMode,
    pub stimulus_text: String,
    pub correct_response: String,
    pub foils: Vec<String>,
    /// Correct response and foils in presentation order.
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stimulus_image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_image: Option<String>,
}

fn placeholder_image(text: &str) -> String {
    format!("img/{}.png", text.replace(' ', "_"))
}

impl VitItem {
    /// Builds one item from a pair; options are the response followed by the foils.
    pub fn from_pair(level: u8, pair: &WordPair, foils: Vec<String>) -> Result<Self, VitError> {
        let spec = level_spec(level)?;
        let mut options = vec![pair.response.clone()];
        options.extend(foils.iter().cloned());
        Ok(VitItem {
            level,
            stimulus_content: spec.stimulus_content,
            stimulus_mode: spec.stimulus_mode,
            response_content: spec.response_content,
            response_mode: spec.response_mode,
            stimulus_text: pair.cue.clone(),
            correct_response: pair.response.clone(),
            foils,
            options,
            stimulus_image: spec
                .stimulus_mode
                .has_image()
                .then(|| pair.image.clone().unwrap_or_else(|| placeholder_image(&pair.cue))),
            response_image: spec.response_mode.has_image().then(|| {
                pair.response_image.clone().unwrap_or_else(|| placeholder_image(&pair.response))
            }),
        })
    }
}

/// Draws `items` pairs for `level` and attaches `foil_count` foils to each.
pub fn build_level(
    level: u8,
    bank: &WordBank,
    items: usize,
    foil_count: usize,
    seed: u64,
) -> Result<Vec<VitItem>, VitError> {
    let spec = level_spec(level)?;
    let pool: Vec<&WordPair> = bank
        .pairs
        .iter()
        .filter(|p| p.kind == spec.pair_kind && spec.tier.is_none_or(|t| t == p.tier))
        .collect();
    let responses: Vec<&str> = {
        let mut r: Vec<&str> = bank
            .pairs
            .iter()
            .filter(|p| p.kind == spec.pair_kind)
            .map(|p| p.response.as_str())
            .collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    if pool.len() < items || responses.len() < foil_count + 1 {
        return Err(VitError::InsufficientBank {
            level,
            kind: spec.pair_kind,
            needed: items.max(foil_count + 1),
            available: pool.len().min(responses.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(level).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut picked = pool;
    picked.shuffle(&mut rng);
    picked.truncate(items);
    picked
        .into_iter()
        .map(|pair| {
            let others: Vec<&str> =
                responses.iter().copied().filter(|r| *r != pair.response).collect();
            let foils: Vec<String> =
                others.choose_multiple(&mut rng, foil_count).map(|s| s.to_string()).collect();
            let mut item = VitItem::from_pair(level, pair, foils)?;
            item.options.shuffle(&mut rng);
            Ok(item)
        })
        .collect()
}

pub fn score_response(item: &VitItem, chosen: &str) -> Result<bool, VitError> {
    if chosen == item.correct_response {
        Ok(true)
    } else if item.foils.iter().any(|f| f == chosen) {
        Ok(false)
    } else {
        Err(VitError::NotAnOption(chosen.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitLevelResult {
    pub level: u8,
    pub items_presented: u32,
    pub items_correct: u32,
}

/// Fraction of all presented items answered correctly.
pub fn imagery_score(results: &[VitLevelResult]) -> Result<f64, VitError> {
    let presented: u32 = results.iter().map(|r| r.items_presented).sum();
    if results.is_empty() || presented == 0 {
        return Err(VitError::Empty);
    }
    let correct: u32 = results.iter().map(|r| r.items_correct).sum();
    Ok(f64::from(correct) / f64::from(presented))
}
