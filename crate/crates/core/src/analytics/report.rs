//! Inputs, the combined report, and its plain-text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::achievement::{achievement_table, AchievementTable};
use super::durations::{normalize_durations, NormalizedDuration};
use super::fixtures::FixtureCheck;
use super::questionnaire::{score_questionnaire, Group, Instrument, QuestionnaireReport, QuestionnaireResponse};
use super::stats::{correlate, format_p, CorrelationResult, DEFAULT_LEVEL};
use super::AnalyticsError;
use crate::record::{Category, SessionRecord};
use crate::taskmodel::{CueType, Regularity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantScores {
    pub participant_id: String,
    pub group: Group,
    pub mist_total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imagery_score: Option<f64>,
}

#[derive(Deserialize)]
struct ParticipantRow {
    id: String,
    group: String,
    mist_total: f64,
    #[serde(default)]
    imagery_score: Option<f64>,
}

/// Reads `participants.csv` (`id,group,mist_total[,imagery_score]`).
/// Returns warnings alongside the rows.
pub fn read_participants(text: &str) -> Result<(Vec<ParticipantScores>, Vec<String>), AnalyticsError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut warnings = Vec::new();
    if !rd.headers()?.iter().any(|h| h == "imagery_score") {
        warnings.push("participants file has no imagery_score column; imagery correlations omitted".to_string());
    }
    let mut out: Vec<ParticipantScores> = Vec::new();
    for row in rd.deserialize::<ParticipantRow>() {
        let row = row?;
        if out.iter().any(|p| p.participant_id == row.id) {
            return Err(AnalyticsError::Input(format!("participant {} listed twice", row.id)));
        }
        if let Some(s) = row.imagery_score.filter(|s| !(0.0..=1.0).contains(s)) {
            return Err(AnalyticsError::Input(format!("imagery score {s} for {} is outside [0, 1]", row.id)));
        }
        out.push(ParticipantScores {
            group: row.group.parse()?,
            participant_id: row.id,
            mist_total: row.mist_total,
            imagery_score: row.imagery_score,
        });
    }
    Ok((out, warnings))
}

/// Reads a questionnaire file: a participant id column followed by one column
/// per item.
pub fn read_questionnaire(text: &str, instrument: Instrument) -> Result<Vec<QuestionnaireResponse>, AnalyticsError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default();
        let items = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<i32>().map_err(|_| AnalyticsError::Input(format!("{id}: item {v:?} is not an integer"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(QuestionnaireResponse::new(instrument, id, items)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeInputs {
    pub records: Vec<SessionRecord>,
    pub participants: Vec<ParticipantScores>,
    pub questionnaires: Vec<QuestionnaireResponse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub category: Category,
    pub predictor: String,
    #[serde(flatten)]
    pub result: CorrelationResult,
    pub p_display: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub achievement: AchievementTable,
    pub correlations: Vec<CorrelationRow>,
    pub durations: Vec<NormalizedDuration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub questionnaires: Option<QuestionnaireReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixture_checks: Vec<FixtureCheck>,
    pub warnings: Vec<String>,
}

/// Event-based irregular task durations per participant, one column per task.
fn duration_columns(records: &[SessionRecord]) -> BTreeMap<String, Vec<(String, i64)>> {
    let mut columns: BTreeMap<String, Vec<(String, i64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.scored) {
        let who = r.participant.clone().unwrap_or_else(|| super::achievement::ANONYMOUS.to_string());
        for t in r.tasks.iter().filter(|t| t.cue_type == CueType::EventBased && t.regularity == Regularity::Irregular) {
            if let Some(&secs) = r.durations.get(&t.id) {
                columns.entry(t.id.clone()).or_default().push((who.clone(), secs as i64));
            }
        }
    }
    columns
}

type Predictor = (&'static str, fn(&ParticipantScores) -> Option<f64>);

pub fn analyze(inputs: &AnalyzeInputs) -> Result<Report, AnalyticsError> {
    let achievement = achievement_table(&inputs.records)?;
    let mut warnings = Vec::new();
    for p in &achievement.participants {
        if !p.missing.is_empty() {
            warnings.push(format!("{} has no record for sessions {:?}", p.participant_id, p.missing));
        }
    }

    let mut correlations = Vec::new();
    let has_imagery = inputs.participants.iter().any(|p| p.imagery_score.is_some());
    let predictors: Vec<Predictor> = {
        let mut v: Vec<Predictor> = Vec::new();
        if !inputs.participants.is_empty() {
            v.push(("MIST", |p| Some(p.mist_total)));
        }
        if has_imagery {
            v.push(("Imagery", |p| p.imagery_score));
        }
        v
    };
    for (name, get) in predictors {
        for category in Category::ALL {
            let (x, y): (Vec<f64>, Vec<f64>) = inputs
                .participants
                .iter()
                .filter_map(|p| {
                    let a = achievement.participants.iter().find(|a| a.participant_id == p.participant_id)?;
                    Some((get(p)?, a.pooled_fraction(category)?))
                })
                .unzip();
            match correlate(&x, &y, DEFAULT_LEVEL) {
                Ok(result) => correlations.push(CorrelationRow {
                    category,
                    predictor: name.to_string(),
                    p_display: format_p(result.p),
                    result,
                }),
                Err(e) => warnings.push(format!("{} / {name}: correlation skipped ({e})", category.label())),
            }
        }
    }

    let durations = normalize_durations(&duration_columns(&inputs.records))?;

    let questionnaires = if inputs.questionnaires.is_empty() {
        None
    } else {
        let groups: BTreeMap<String, Group> =
            inputs.participants.iter().map(|p| (p.participant_id.clone(), p.group)).collect();
        Some(score_questionnaire(&inputs.questionnaires, &groups)?)
    };

    Ok(Report { achievement, correlations, durations, questionnaires, fixture_checks: Vec::new(), warnings })
}

/// Text tables laid out like the published ones.
pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    if !report.correlations.is_empty() {
        let _ = writeln!(s, "Correlations with task achievement");
        let _ = writeln!(s, "{:<10} {:<8} {:>6}  {:<16} {:>8}  {:>3}", "Type", "Score", "r", "95% CI", "p", "n");
    }
    for c in &report.correlations {
        let r = &c.result;
        let _ = writeln!(
            s,
            "{:<10} {:<8} {:>6.3}  [{:.3}, {:.3}]   {:>8}  {:>3}",
            c.category.label(),
            c.predictor,
            r.r,
            r.ci_low,
            r.ci_high,
            c.p_display,
            r.n
        );
    }

    if !report.achievement.participants.is_empty() {
        let _ = writeln!(s, "\nTask achievement rate per session");
        let _ = writeln!(s, "{:<12} {:>6} {:>6} {:>6} {:>6}", "Participant", 5, 6, 7, 8);
    }
    for p in &report.achievement.participants {
        let cells: Vec<String> = (5..=8)
            .map(|n| p.sessions.get(&n).and_then(|r| r.total).map_or("-".to_string(), |r| format!("{:.3}", r.rounded())))
            .collect();
        let _ = writeln!(s, "{:<12} {:>6} {:>6} {:>6} {:>6}", p.participant_id, cells[0], cells[1], cells[2], cells[3]);
    }

    if !report.durations.is_empty() {
        let _ = writeln!(s, "\nRemember-to-execute durations (normalized)");
        let mut tasks: Vec<&str> = report.durations.iter().map(|d| d.task_id.as_str()).collect();
        tasks.sort_unstable();
        tasks.dedup();
        let mut people: Vec<&str> = report.durations.iter().map(|d| d.participant_id.as_str()).collect();
        people.sort_unstable();
        people.dedup();
        let _ = write!(s, "{:<12}", "Participant");
        for t in &tasks {
            let _ = write!(s, " {t:>15}");
        }
        let _ = writeln!(s);
        for who in people {
            let _ = write!(s, "{who:<12}");
            for t in &tasks {
                let cell = report
                    .durations
                    .iter()
                    .find(|d| d.participant_id == who && d.task_id == *t)
                    .map_or(String::new(), |d| format!("{} ({:.3})", d.duration, d.normalized));
                let _ = write!(s, " {cell:>15}");
            }
            let _ = writeln!(s);
        }
    }

    if let Some(q) = &report.questionnaires {
        for (g, u) in &q.ueq_s {
            let items: Vec<String> = u.item_means.iter().map(|m| format!("{m:.2}")).collect();
            let _ = writeln!(s, "\nUEQ-S {g} (n={}): items {} | pragmatic {:.2} hedonic {:.2}", u.respondents, items.join(" "), u.pragmatic, u.hedonic);
        }
        for (g, j) in &q.jikaku_sho {
            let cats: Vec<String> = j.category_means.iter().map(|(k, v)| format!("{k} {v:.2}")).collect();
            let _ = writeln!(s, "\nJikaku-sho {g} (n={}): {}", j.respondents, cats.join(", "));
        }
    }

    if !report.fixture_checks.is_empty() {
        let passed = report.fixture_checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "\nFixture checks: {passed}/{} within tolerance", report.fixture_checks.len());
        for c in &report.fixture_checks {
            let mark = if c.pass { "ok " } else { "BAD" };
            let _ = writeln!(s, "  {mark} table {} {}: printed {} computed {}", c.table, c.item, c.printed, c.computed);
            if let Some(n) = &c.note {
                let _ = writeln!(s, "      note: {n}");
            }
        }
    }

    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn participants_without_imagery_warn() {
        let (rows, warnings) = read_participants("id,group,mist_total\nA,elderly,12\nb,young,40\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].group, Group::Young);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn participants_rejects_duplicates_and_bad_imagery() {
        assert!(read_participants("id,group,mist_total,imagery_score\nA,elderly,1,0.5\nA,young,2,0.5\n").is_err());
        assert!(read_participants("id,group,mist_total,imagery_score\nA,elderly,1,1.5\n").is_err());
    }

    #[test]
    fn questionnaire_files() {
        let q = read_questionnaire("id,q1,q2,q3,q4,q5,q6,q7,q8\nA,0,1,2,3,-1,-2,-3,0\n", Instrument::UeqS).unwrap();
        assert_eq!(q[0].items.len(), 8);
        assert!(read_questionnaire("id,q1\nA,0\n", Instrument::UeqS).is_err());
    }
}
