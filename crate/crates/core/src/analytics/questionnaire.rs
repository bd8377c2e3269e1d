//! UEQ-S and Jikaku-sho scoring.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

pub const UEQ_S_ITEMS: usize = 8;
pub const UEQ_S_RANGE: (i32, i32) = (-3, 3);
/// Items 1-4 are pragmatic quality, 5-8 hedonic.
pub const UEQ_S_PRAGMATIC: std::ops::Range<usize> = 0..4;
pub const UEQ_S_HEDONIC: std::ops::Range<usize> = 4..8;

pub const JIKAKU_ITEMS: usize = 25;
pub const JIKAKU_RANGE: (i32, i32) = (1, 5);
pub const JIKAKU_CATEGORIES: [&str; 5] = ["drowsiness", "instability", "uneasiness", "dullness", "eyestrain"];
pub const JIKAKU_PER_CATEGORY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    UeqS,
    JikakuSho,
}

impl Instrument {
    pub fn item_count(self) -> usize {
        match self {
            Instrument::UeqS => UEQ_S_ITEMS,
            Instrument::JikakuSho => JIKAKU_ITEMS,
        }
    }

    pub fn range(self) -> (i32, i32) {
        match self {
            Instrument::UeqS => UEQ_S_RANGE,
            Instrument::JikakuSho => JIKAKU_RANGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Elderly,
    Young,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Elderly => "elderly",
            Group::Young => "young",
        })
    }
}

impl FromStr for Group {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "elderly" | "older" => Ok(Group::Elderly),
            "young" | "younger" => Ok(Group::Young),
            _ => Err(AnalyticsError::Input(format!("unknown group {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub instrument: Instrument,
    pub participant_id: String,
    pub items: Vec<i32>,
}

impl QuestionnaireResponse {
    pub fn new(instrument: Instrument, participant_id: &str, items: Vec<i32>) -> Result<Self, AnalyticsError> {
        let r = QuestionnaireResponse { instrument, participant_id: participant_id.to_string(), items };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let expected = self.instrument.item_count();
        if self.items.len() != expected {
            return Err(AnalyticsError::ItemCount {
                participant: self.participant_id.clone(),
                expected,
                got: self.items.len(),
            });
        }
        let (lo, hi) = self.instrument.range();
        if let Some((i, &v)) = self.items.iter().enumerate().find(|(_, v)| !(lo..=hi).contains(*v)) {
            return Err(AnalyticsError::ItemRange { participant: self.participant_id.clone(), item: i + 1, value: v, lo, hi });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeqSummary {
    pub respondents: usize,
    pub item_means: Vec<f64>,
    pub pragmatic: f64,
    pub hedonic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JikakuSummary {
    pub respondents: usize,
    pub category_means: BTreeMap<String, f64>,
}

fn item_means(responses: &[&QuestionnaireResponse], items: usize) -> Vec<f64> {
    let n = responses.len() as f64;
    (0..items).map(|i| responses.iter().map(|r| f64::from(r.items[i])).sum::<f64>() / n).collect()
}

fn check_all(responses: &[&QuestionnaireResponse], instrument: Instrument) -> Result<(), AnalyticsError> {
    if responses.is_empty() {
        return Err(AnalyticsError::Input(format!("no {instrument:?} responses")));
    }
    for r in responses {
        if r.instrument != instrument {
            return Err(AnalyticsError::Input(format!("{} answered {:?}, expected {instrument:?}", r.participant_id, r.instrument)));
        }
        r.validate()?;
    }
    Ok(())
}

pub fn score_ueq(responses: &[&QuestionnaireResponse]) -> Result<UeqSummary, AnalyticsError> {
    check_all(responses, Instrument::UeqS)?;
    let means = item_means(responses, UEQ_S_ITEMS);
    let avg = |r: std::ops::Range<usize>| means[r.clone()].iter().sum::<f64>() / r.len() as f64;
    Ok(UeqSummary { respondents: responses.len(), pragmatic: avg(UEQ_S_PRAGMATIC), hedonic: avg(UEQ_S_HEDONIC), item_means: means })
}

/// Categories are consecutive blocks of five items in questionnaire order.
pub fn score_jikaku(responses: &[&QuestionnaireResponse]) -> Result<JikakuSummary, AnalyticsError> {
    check_all(responses, Instrument::JikakuSho)?;
    let means = item_means(responses, JIKAKU_ITEMS);
    let category_means = JIKAKU_CATEGORIES
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let block = &means[c * JIKAKU_PER_CATEGORY..(c + 1) * JIKAKU_PER_CATEGORY];
            (name.to_string(), block.iter().sum::<f64>() / JIKAKU_PER_CATEGORY as f64)
        })
        .collect();
    Ok(JikakuSummary { respondents: responses.len(), category_means })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireReport {
    pub ueq_s: BTreeMap<Group, UeqSummary>,
    pub jikaku_sho: BTreeMap<Group, JikakuSummary>,
}

/// Scores each instrument per group. Respondents without a known group are
/// an input error.
pub fn score_questionnaire(
    responses: &[QuestionnaireResponse],
    groups: &BTreeMap<String, Group>,
) -> Result<QuestionnaireReport, AnalyticsError> {
    let mut by: BTreeMap<(Instrument, Group), Vec<&QuestionnaireResponse>> = BTreeMap::new();
    for r in responses {
        r.validate()?;
        let g = groups
            .get(&r.participant_id)
            .ok_or_else(|| AnalyticsError::Input(format!("participant {} has no group", r.participant_id)))?;
        by.entry((r.instrument, *g)).or_default().push(r);
    }
    let mut report = QuestionnaireReport::default();
    for ((instrument, group), rs) in by {
        match instrument {
            Instrument::UeqS => {
                report.ueq_s.insert(group, score_ueq(&rs)?);
            }
            Instrument::JikakuSho => {
                report.jikaku_sho.insert(group, score_jikaku(&rs)?);
            }
        }
    }
    Ok(report)
}
