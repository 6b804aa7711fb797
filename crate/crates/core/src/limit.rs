//! Level-alpha limits on the beta-fraction of `m` future losses.
//!
//! For a calibration sample of size `n` the limit is an order statistic
//! `L^c_(k*)`, where `k*` is the smallest index whose miscoverage tail
//! `a(k*)` is at most `alpha`. Three routes pick `k*`:
//!
//! * finite `m`: scan `a(k)` from [`tail_a_all`];
//! * `m = 1`: closed form `ceil((n + 1)(1 - alpha))`;
//! * `m = inf`: `1 + BIN^{-1}(1 - alpha; n, beta)`.
//!
//! The comparison `a(k) <= alpha` is a plain floating-point `<=`.

use std::fmt;
use std::str::FromStr;

use crate::combinatorics::{binomial_quantile, binomial_upper_tail_all, tail_a_all};
use crate::error::{LalError, Result};
use crate::sample::CalibrationSample;

const SNAP_TOLERANCE: f64 = 1e-9;

/// Number of future losses the limit has to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchSize {
    Finite(u64),
    Infinite,
}

impl BatchSize {
    pub fn finite(self) -> Option<u64> {
        match self {
            BatchSize::Finite(m) => Some(m),
            BatchSize::Infinite => None,
        }
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Finite(m) => f.pad(&m.to_string()),
            BatchSize::Infinite => f.pad("inf"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(BatchSize::Infinite);
        }
        match s.parse::<u64>() {
            Ok(m) if m >= 1 => Ok(BatchSize::Finite(m)),
            _ => Err(LalError::domain(format!(
                "batch size must be a positive integer or `inf`, got `{s}`"
            ))),
        }
    }
}

/// Batch size, covered fraction and level of a limit query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LalQuery {
    m: BatchSize,
    beta: f64,
    alpha: f64,
}

impl LalQuery {
    pub fn new(m: BatchSize, beta: f64, alpha: f64) -> Result<Self> {
        check_beta(beta)?;
        check_alpha(alpha)?;
        if m == BatchSize::Finite(0) {
            return Err(LalError::domain("batch size m must be at least 1"));
        }
        Ok(Self { m, beta, alpha })
    }

    pub fn m(&self) -> BatchSize {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Result of a limit computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LalOutcome {
    /// Index of the chosen calibration order statistic, in `1..=n+1`.
    pub k_star: u64,
    /// The limit `L^c_(k*)`; the upper support bound when `k* = n + 1`.
    pub limit: f64,
    /// `1 - a(k*)`. For `m = inf` this is the limiting value.
    pub exact_coverage: f64,
    /// `ceil(m * beta)` for finite `m`.
    pub ordinal: Option<u64>,
    /// The calibration sample has ties, so `exact_coverage` is a lower
    /// bound rather than the attained value.
    pub conservative_under_ties: bool,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(LalError::domain(format!(
            "beta must lie in (0, 1], got {beta}"
        )))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(LalError::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// `ceil(m * beta)`, snapping products within 1e-9 of an integer so that
/// e.g. `10 * 0.3` gives 3 rather than 4.
pub fn ceil_fraction(m: u64, beta: f64) -> Result<u64> {
    if m == 0 {
        return Err(LalError::domain("batch size m must be at least 1"));
    }
    check_beta(beta)?;
    let t = m as f64 * beta;
    let nearest = t.round();
    let q = if (t - nearest).abs() < SNAP_TOLERANCE {
        nearest
    } else {
        t.ceil()
    };
    Ok((q as u64).clamp(1, m))
}

/// Miscoverage tail `a(k)` for `k = 1..=n+1` under any batch size. For
/// `m = inf` this is the binomial upper tail `1 - BIN(k - 1; n, beta)`.
pub fn miscoverage_tail(n: u64, m: BatchSize, beta: f64) -> Result<Vec<f64>> {
    match m {
        BatchSize::Finite(m) => tail_a_all(n, m, ceil_fraction(m, beta)?),
        BatchSize::Infinite => {
            let upper = binomial_upper_tail_all(n, beta)?;
            Ok(upper[1..].to_vec())
        }
    }
}

fn first_within(tail: &[f64], alpha: f64) -> u64 {
    // The last entry is a(n+1) = 0, so a position always exists.
    tail.iter()
        .position(|&a| a <= alpha)
        .unwrap_or(tail.len() - 1) as u64
        + 1
}

/// `min { k in 1..=n+1 : a(k) <= alpha }` for a finite batch.
pub fn k_star_finite(n: u64, m: u64, beta: f64, alpha: f64) -> Result<u64> {
    check_alpha(alpha)?;
    let tail = tail_a_all(n, m, ceil_fraction(m, beta)?)?;
    Ok(first_within(&tail, alpha))
}

/// `ceil((n + 1)(1 - alpha))` clamped to `1..=n+1`.
///
/// The float product can land one step off when `(n + 1)(1 - alpha)` is
/// within rounding of an integer, so the candidate is nudged until
/// `(n + 1 - k) / (n + 1) <= alpha` holds for `k` and fails for `k - 1`.
/// The division is correctly rounded, which makes the result agree with
/// [`k_star_finite`] at `m = 1`.
pub fn k_star_single(n: u64, alpha: f64) -> Result<u64> {
    if n == 0 {
        return Err(LalError::domain("calibration size n must be at least 1"));
    }
    check_alpha(alpha)?;
    let total = (n + 1) as f64;
    let within = |k: u64| ((n + 1 - k) as f64 / total) <= alpha;
    let mut k = ((total * (1.0 - alpha)).ceil() as u64).clamp(1, n + 1);
    while k > 1 && within(k - 1) {
        k -= 1;
    }
    while !within(k) {
        k += 1;
    }
    Ok(k)
}

/// `1 + BIN^{-1}(1 - alpha; n, beta)`, the limiting index as `m -> inf`.
pub fn k_star_infinite(n: u64, beta: f64, alpha: f64) -> Result<u64> {
    check_alpha(alpha)?;
    Ok((1 + binomial_quantile(1.0 - alpha, n, beta)?).min(n + 1))
}

/// Level-alpha limit for `query` from the calibration `sample`.
pub fn lal(sample: &CalibrationSample, query: &LalQuery) -> Result<LalOutcome> {
    let n = sample.n();
    let (k_star, a_k, ordinal) = match query.m {
        BatchSize::Finite(1) => {
            let k = k_star_single(n, query.alpha)?;
            (k, (n + 1 - k) as f64 / (n + 1) as f64, Some(1))
        }
        BatchSize::Finite(m) => {
            let q = ceil_fraction(m, query.beta)?;
            let tail = tail_a_all(n, m, q)?;
            let k = first_within(&tail, query.alpha);
            (k, tail[k as usize - 1], Some(q))
        }
        BatchSize::Infinite => {
            let k = k_star_infinite(n, query.beta, query.alpha)?;
            let upper = binomial_upper_tail_all(n, query.beta)?;
            (k, upper[k as usize], None)
        }
    };
    Ok(LalOutcome {
        k_star,
        limit: sample.order_statistic(k_star)?,
        exact_coverage: 1.0 - a_k,
        ordinal,
        conservative_under_ties: sample.has_ties(),
    })
}
