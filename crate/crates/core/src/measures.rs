//! Association measures over 2x2 bigram contingency counts.
//!
//! All three measures read the same [`BigramStats`]: `c12` joint count,
//! `c1` occurrences of the first word in first position, `c2` occurrences
//! of the second word in second position and `n` pair positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("joint count is zero; the measure is undefined")]
    ZeroJoint,
    #[error("invalid contingency counts c12={c12} c1={c1} c2={c2} n={n}")]
    InvalidStats { c12: u64, c1: u64, c2: u64, n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BigramStats {
    pub c12: u64,
    pub c1: u64,
    pub c2: u64,
    pub n: u64,
}

impl BigramStats {
    pub fn new(c12: u64, c1: u64, c2: u64, n: u64) -> Self {
        BigramStats { c12, c1, c2, n }
    }

    /// `1 <= c12 <= min(c1, c2)`, `c1, c2 <= n` and the fourth cell
    /// `n - c1 - c2 + c12` is non-negative.
    pub fn validate(&self) -> Result<(), MeasureError> {
        let BigramStats { c12, c1, c2, n } = *self;
        if c12 == 0 {
            return Err(MeasureError::ZeroJoint);
        }
        let ok = n >= 1 && c12 <= c1.min(c2) && c1 <= n && c2 <= n && c1 + c2 - c12 <= n;
        if ok {
            Ok(())
        } else {
            Err(MeasureError::InvalidStats { c12, c1, c2, n })
        }
    }
}

/// Variance used in the t statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// `S^2 = p(1 - p)` with `p` the bigram MLE.
    #[default]
    Full,
    /// `S^2 ~= p`, the usual small-p shortcut.
    Simplified,
}

impl std::str::FromStr for VarianceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(VarianceMode::Full),
            "simplified" => Ok(VarianceMode::Simplified),
            other => Err(format!(
                "unknown variance mode {other:?} (expected full|simplified)"
            )),
        }
    }
}

/// Result of the t statistic. `Degenerate` marks a zero sample variance
/// (every pair position is this bigram).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TStat {
    Finite(f64),
    Degenerate,
}

impl TStat {
    /// Numeric value; the degenerate case is `+inf`.
    pub fn value(self) -> f64 {
        match self {
            TStat::Finite(t) => t,
            TStat::Degenerate => f64::INFINITY,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, TStat::Degenerate)
    }
}

/// Pointwise mutual information in bits.
pub fn pmi(s: &BigramStats) -> Result<f64, MeasureError> {
    s.validate()?;
    // Both products are exact for counts below 2^26, so exact independence
    // gives a ratio of exactly 1.
    let joint = s.c12 as f64 * s.n as f64;
    let product = s.c1 as f64 * s.c2 as f64;
    Ok((joint / product).log2())
}

pub fn t_stat(s: &BigramStats, mode: VarianceMode) -> Result<TStat, MeasureError> {
    s.validate()?;
    let n = s.n as f64;
    let mean = s.c12 as f64 / n;
    let variance = match mode {
        VarianceMode::Full => mean * (1.0 - mean),
        VarianceMode::Simplified => mean,
    };
    if variance <= 0.0 {
        return Ok(TStat::Degenerate);
    }
    // Observed minus expected, numerator kept in exact integers.
    let diff = s.c12 as i128 * s.n as i128 - s.c1 as i128 * s.c2 as i128;
    let diff = diff as f64 / (n * n);
    Ok(TStat::Finite(diff / (variance / n).sqrt()))
}

/// `k ln(a / b)` with the `0 ln 0 = 0` convention.
fn xlog_ratio(k: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * (a / b).ln()
    }
}

/// Difference of binomial log-likelihoods `l(p_hat; k, n) - l(p; k, n)`
/// with `p_hat = k / n`.
fn binomial_gain(k: u64, n: u64, p: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p_hat = k as f64 / n as f64;
    xlog_ratio(k as f64, p_hat, p) + xlog_ratio((n - k) as f64, 1.0 - p_hat, 1.0 - p)
}

/// Dunning's `-2 log lambda` for independence against dependence of the
/// second word on the first.
pub fn log_likelihood_ratio(s: &BigramStats) -> Result<f64, MeasureError> {
    s.validate()?;
    let (k1, n1) = (s.c12, s.c1);
    let (k2, n2) = (s.c2 - s.c12, s.n - s.c1);
    let p = s.c2 as f64 / s.n as f64;
    Ok(2.0 * (binomial_gain(k1, n1, p) + binomial_gain(k2, n2, p)))
}

/// Raw (un-normalized) measures for one bigram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureVector {
    pub mi: f64,
    pub t: f64,
    pub llr: f64,
    /// Set when `t` is the degenerate-variance sentinel (`+inf`).
    pub t_degenerate: bool,
}

pub fn measure_all(s: &BigramStats, mode: VarianceMode) -> Result<MeasureVector, MeasureError> {
    let t = t_stat(s, mode)?;
    Ok(MeasureVector {
        mi: pmi(s)?,
        t: t.value(),
        llr: log_likelihood_ratio(s)?,
        t_degenerate: t.is_degenerate(),
    })
}
