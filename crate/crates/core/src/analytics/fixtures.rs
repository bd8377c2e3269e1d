//! Published result tables shipped as CSV, and checks that the analytics
//! reproduce them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::achievement::reconstruct_count;
use super::durations::{normalize_column, parse_mmss, round3};
use super::stats::{fisher_ci, p_value, DEFAULT_LEVEL};
use super::AnalyticsError;

pub const TABLE4: &str = include_str!("../../../../fixtures/table4.csv");
pub const TABLE5: &str = include_str!("../../../../fixtures/table5.csv");
pub const TABLE7: &str = include_str!("../../../../fixtures/table7.csv");

/// Participants behind every correlation in the published table.
pub const TABLE4_N: usize = 10;
pub const CI_TOLERANCE: f64 = 0.002;
pub const P_TOLERANCE: f64 = 0.001;
/// Ceiling for rows printed as a threshold ("< 0.0001").
pub const P_THRESHOLD_CEILING: f64 = 0.0005;
pub const RATE_TOLERANCE: f64 = 0.0005;
pub const NORMALIZED_TOLERANCE: f64 = 0.001;
/// Tasks per scored session, sessions 5 through 8.
pub const SESSION_DENOMINATORS: [u32; 4] = [7, 8, 9, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrintedP {
    Exact(f64),
    Below(f64),
}

impl PrintedP {
    fn parse(s: &str) -> Result<Self, AnalyticsError> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| AnalyticsError::Input(format!("bad p {s:?}")));
        match s.strip_prefix('<') {
            Some(rest) => Ok(PrintedP::Below(num(rest)?)),
            None => Ok(PrintedP::Exact(num(s)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    pub category: String,
    pub predictor: String,
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: PrintedP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table5Row {
    pub participant: String,
    pub group: String,
    pub rates: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table7Cell {
    pub participant: String,
    pub task: String,
    pub seconds: i64,
    pub printed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    pub table4: Vec<Table4Row>,
    pub table5: Vec<Table5Row>,
    pub table7: Vec<Table7Cell>,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, what: &str) -> Result<&'a str, AnalyticsError> {
    rec.get(i).ok_or_else(|| AnalyticsError::Input(format!("missing {what}")))
}

fn number(s: &str) -> Result<f64, AnalyticsError> {
    s.parse().map_err(|_| AnalyticsError::Input(format!("not a number: {s:?}")))
}

pub fn parse_table4(text: &str) -> Result<Vec<Table4Row>, AnalyticsError> {
    let mut rows = Vec::new();
    for rec in reader(text).records() {
        let rec = rec?;
        rows.push(Table4Row {
            category: field(&rec, 0, "type")?.to_string(),
            predictor: field(&rec, 1, "predictor")?.to_string(),
            r: number(field(&rec, 2, "r")?)?,
            ci_low: number(field(&rec, 3, "ci_low")?)?,
            ci_high: number(field(&rec, 4, "ci_high")?)?,
            p: PrintedP::parse(field(&rec, 5, "p")?)?,
        });
    }
    Ok(rows)
}

pub fn parse_table5(text: &str) -> Result<Vec<Table5Row>, AnalyticsError> {
    let mut rows = Vec::new();
    for rec in reader(text).records() {
        let rec = rec?;
        let mut rates = [0.0; 4];
        for (i, r) in rates.iter_mut().enumerate() {
            *r = number(field(&rec, 2 + i, "rate")?)?;
        }
        rows.push(Table5Row { participant: field(&rec, 0, "participant")?.to_string(), group: field(&rec, 1, "group")?.to_string(), rates });
    }
    Ok(rows)
}

/// Cells look like `08:05 (0.751)`; empty cells are tasks not executed.
pub fn parse_table7(text: &str) -> Result<Vec<Table7Cell>, AnalyticsError> {
    let mut rd = reader(text);
    let tasks: Vec<String> = rd.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut cells = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let participant = field(&rec, 0, "participant")?.to_string();
        for (i, task) in tasks.iter().enumerate() {
            let cell = rec.get(i + 1).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let bad = || AnalyticsError::Input(format!("bad duration cell {cell:?}"));
            let (d, rest) = cell.split_once('(').ok_or_else(bad)?;
            let printed = number(rest.trim_end_matches(')').trim())?;
            cells.push(Table7Cell { participant: participant.clone(), task: task.clone(), seconds: parse_mmss(d)?, printed });
        }
    }
    Ok(cells)
}

impl Fixtures {
    pub fn bundled() -> Result<Self, AnalyticsError> {
        Ok(Fixtures { table4: parse_table4(TABLE4)?, table5: parse_table5(TABLE5)?, table7: parse_table7(TABLE7)? })
    }

    /// Reads `table4.csv`, `table5.csv`, and `table7.csv` from `dir`.
    pub fn load(dir: &Path) -> Result<Self, AnalyticsError> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| AnalyticsError::Input(format!("{}: {e}", p.display())))
        };
        Ok(Fixtures {
            table4: parse_table4(&read("table4.csv")?)?,
            table5: parse_table5(&read("table5.csv")?)?,
            table7: parse_table7(&read("table7.csv")?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCheck {
    pub table: String,
    pub item: String,
    pub printed: String,
    pub computed: String,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn check(table: &str, item: String, printed: String, computed: String, tolerance: f64, pass: bool) -> FixtureCheck {
    FixtureCheck { table: table.into(), item, printed, computed, tolerance, pass, note: None }
}

pub fn check_table4(rows: &[Table4Row]) -> Result<Vec<FixtureCheck>, AnalyticsError> {
    let mut out = Vec::new();
    for row in rows {
        let label = format!("{} / {}", row.category, row.predictor);
        let ci = fisher_ci(row.r, TABLE4_N, DEFAULT_LEVEL)?;
        for (name, printed, got) in [("ci_low", row.ci_low, ci.low), ("ci_high", row.ci_high, ci.high)] {
            out.push(check(
                "4",
                format!("{label} {name}"),
                format!("{printed:.3}"),
                format!("{got:.4}"),
                CI_TOLERANCE,
                (got - printed).abs() <= CI_TOLERANCE,
            ));
        }
        let p = p_value(row.r, TABLE4_N)?;
        let c = match row.p {
            PrintedP::Exact(v) => {
                check("4", format!("{label} p"), format!("{v:.3}"), format!("{p:.5}"), P_TOLERANCE, (p - v).abs() <= P_TOLERANCE)
            }
            PrintedP::Below(t) => {
                let mut c = check("4", format!("{label} p"), format!("< {t}"), format!("{p:.5}"), P_THRESHOLD_CEILING, p <= P_THRESHOLD_CEILING);
                if p >= t {
                    c.note = Some(format!(
                        "method discrepancy: t-test with {} df gives {p:.6}, above the printed threshold {t}",
                        TABLE4_N - 2
                    ));
                }
                c
            }
        };
        out.push(c);
    }
    Ok(out)
}

pub fn check_table5(rows: &[Table5Row]) -> Vec<FixtureCheck> {
    let mut out = Vec::new();
    for row in rows {
        for (i, (&v, &n)) in row.rates.iter().zip(&SESSION_DENOMINATORS).enumerate() {
            let k = reconstruct_count(v, n, RATE_TOLERANCE);
            let computed = k.map_or("no k/n".to_string(), |k| format!("{k}/{n} = {:.3}", f64::from(k) / f64::from(n)));
            let pass = k.is_some_and(|k| round3(f64::from(k) / f64::from(n)) == v);
            out.push(check("5", format!("{} session {}", row.participant, 5 + i), format!("{v:.3}"), computed, RATE_TOLERANCE, pass));
        }
    }
    out
}

pub fn check_table7(cells: &[Table7Cell]) -> Result<Vec<FixtureCheck>, AnalyticsError> {
    let mut tasks: Vec<&str> = cells.iter().map(|c| c.task.as_str()).collect();
    tasks.sort_unstable();
    tasks.dedup();
    let mut out = Vec::new();
    for task in tasks {
        let column: Vec<&Table7Cell> = cells.iter().filter(|c| c.task == task).collect();
        let values: Vec<i64> = column.iter().map(|c| c.seconds).collect();
        let normalized = normalize_column(&values)?;
        for (c, n) in column.iter().zip(normalized) {
            out.push(check(
                "7",
                format!("{} {}", task, c.participant),
                format!("{}", c.printed),
                format!("{n:.4}"),
                NORMALIZED_TOLERANCE,
                (n - c.printed).abs() <= NORMALIZED_TOLERANCE,
            ));
        }
    }
    Ok(out)
}

pub fn check_fixtures(f: &Fixtures) -> Result<Vec<FixtureCheck>, AnalyticsError> {
    let mut out = check_table4(&f.table4)?;
    out.extend(check_table5(&f.table5));
    out.extend(check_table7(&f.table7)?);
    Ok(out)
}
