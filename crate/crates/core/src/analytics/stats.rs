//! Pearson correlation with Fisher-z intervals and t-test p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("vectors differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {min} observations, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("correlation is undefined for a constant vector")]
    Constant,
    #[error("non-finite input")]
    NonFinite,
    #[error("confidence level {0} is not in (0, 1)")]
    BadLevel(f64),
    #[error("r = {0} is outside [-1, 1]")]
    BadR(f64),
}

pub const DEFAULT_LEVEL: f64 = 0.95;

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < min {
        return Err(StatsError::TooFew { n: x.len(), min });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sums of centered squares and cross products.
fn moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).fold((0.0, 0.0, 0.0), |(sxx, syy, sxy), (a, b)| {
        let (dx, dy) = (a - mx, b - my);
        (sxx + dx * dx, syy + dy * dy, sxy + dx * dy)
    })
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 3)?;
    let (sxx, syy, sxy) = moments(x, y);
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Constant);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Least-squares line `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    check_pair(x, y, 2)?;
    let (sxx, _, sxy) = moments(x, y);
    if sxx == 0.0 {
        return Err(StatsError::Constant);
    }
    let slope = sxy / sxx;
    Ok((slope, mean(y) - slope * mean(x)))
}

/// Two-sided standard normal quantile for `level`.
pub fn normal_quantile(level: f64) -> Result<f64, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    /// Set when |r| = 1 and the interval collapses to a point.
    pub degenerate: bool,
}

/// Fisher-z confidence interval for a correlation from `n` pairs.
pub fn fisher_ci(r: f64, n: usize, level: f64) -> Result<Interval, StatsError> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(StatsError::BadR(r));
    }
    if n < 4 {
        return Err(StatsError::TooFew { n, min: 4 });
    }
    let q = normal_quantile(level)?;
    if r.abs() == 1.0 {
        return Ok(Interval { low: r, high: r, degenerate: true });
    }
    let z = r.atanh();
    let half = q / ((n - 3) as f64).sqrt();
    Ok(Interval { low: (z - half).tanh(), high: (z + half).tanh(), degenerate: false })
}

/// Two-sided p-value of the t-test for zero correlation, n - 2 degrees of
/// freedom. A perfect correlation returns the smallest positive double.
pub fn p_value(r: f64, n: usize) -> Result<f64, StatsError> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(StatsError::BadR(r));
    }
    if n < 3 {
        return Err(StatsError::TooFew { n, min: 3 });
    }
    if r.abs() == 1.0 {
        return Ok(f64::MIN_POSITIVE);
    }
    let df = (n - 2) as f64;
    let t = r * df.sqrt() / (1.0 - r * r).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok((2.0 * dist.sf(t.abs())).clamp(f64::MIN_POSITIVE, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: f64,
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
}

pub fn correlate(x: &[f64], y: &[f64], level: f64) -> Result<CorrelationResult, StatsError> {
    let r = pearson(x, y)?;
    let n = x.len();
    let ci = fisher_ci(r, n, level)?;
    let (slope, intercept) = linear_fit(x, y)?;
    Ok(CorrelationResult { r, ci_low: ci.low, ci_high: ci.high, p: p_value(r, n)?, n, slope, intercept })
}

/// Display form for p: three decimals, or a threshold below 0.001.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< 0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}
