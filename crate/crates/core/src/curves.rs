//! Exact LAL-curves (limit as a function of alpha) and multi-sample tables.
//!
//! A curve is stored as its `n + 1` breakpoints `(a(k), L^c_(k))`. For
//! `alpha` in `[a(k), a(k-1))` the limit is `L^c_(k)`, and for
//! `alpha >= a(1)` it is `L^c_(1)`.

use std::str::FromStr;

use crate::error::{LalError, Result};
use crate::limit::{lal, miscoverage_tail, BatchSize, LalOutcome, LalQuery};
use crate::sample::CalibrationSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub k: u64,
    /// `a(k)`, the smallest alpha at which this limit is returned.
    pub alpha: f64,
    pub limit: f64,
}

impl Breakpoint {
    pub fn exact_coverage(&self) -> f64 {
        1.0 - self.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LalCurve {
    pub m: BatchSize,
    pub beta: f64,
    pub breakpoints: Vec<Breakpoint>,
}

impl LalCurve {
    /// The breakpoint in force at level `alpha`: the first `k` with
    /// `a(k) <= alpha`.
    pub fn at(&self, alpha: f64) -> Result<Breakpoint> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(LalError::domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(*self
            .breakpoints
            .iter()
            .find(|b| b.alpha <= alpha)
            .unwrap_or_else(|| {
                self.breakpoints
                    .last()
                    .expect("curve has n + 1 breakpoints")
            }))
    }

    pub fn limit_at(&self, alpha: f64) -> Result<f64> {
        Ok(self.at(alpha)?.limit)
    }

    /// Evaluate the curve on a grid of levels.
    pub fn sample_grid(&self, alphas: &[f64]) -> Result<Vec<(f64, Breakpoint)>> {
        alphas.iter().map(|&a| Ok((a, self.at(a)?))).collect()
    }
}

pub fn curve_breakpoints(sample: &CalibrationSample, m: BatchSize, beta: f64) -> Result<LalCurve> {
    // Validates m and beta; alpha is irrelevant here.
    LalQuery::new(m, beta, 0.5)?;
    let tail = miscoverage_tail(sample.n(), m, beta)?;
    let breakpoints = tail
        .into_iter()
        .enumerate()
        .map(|(idx, alpha)| {
            let k = idx as u64 + 1;
            Ok(Breakpoint {
                k,
                alpha,
                limit: sample.order_statistic(k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LalCurve {
        m,
        beta,
        breakpoints,
    })
}

/// Evenly spaced levels `start, start + step, ..., <= end`, written
/// `start:end:step` on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(pub Vec<f64>);

impl AlphaGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(start > 0.0) || !(end < 1.0) || start > end {
            return Err(LalError::domain(format!(
                "alpha grid {start}:{end}:{step} must satisfy 0 < start <= end < 1 and step > 0"
            )));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        // Round away accumulated float noise so `0.05:0.3:0.05` yields 0.15
        // rather than 0.15000000000000002.
        let snap = |x: f64| (x * 1e12).round() / 1e12;
        Ok(AlphaGrid(
            (0..count).map(|i| snap(start + i as f64 * step)).collect(),
        ))
    }
}

impl FromStr for AlphaGrid {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| LalError::domain(format!("cannot parse alpha grid `{s}`")))?;
        match parts.as_slice() {
            [start, end, step] => AlphaGrid::new(*start, *end, *step),
            _ => Err(LalError::domain(format!(
                "alpha grid `{s}` must be start:end:step"
            ))),
        }
    }
}

/// Limits of several samples side by side on a shared alpha grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub m: BatchSize,
    pub beta: f64,
    pub names: Vec<String>,
    /// Mean calibration loss per sample. Unlike the limits it carries no
    /// finite-sample guarantee.
    pub mean_losses: Vec<f64>,
    pub curves: Vec<LalCurve>,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub alpha: f64,
    /// One outcome per sample, in the order of `names`.
    pub outcomes: Vec<LalOutcome>,
}

pub fn compare_table(
    samples: &[(String, CalibrationSample)],
    m: BatchSize,
    beta: f64,
    alphas: &[f64],
) -> Result<ComparisonTable> {
    if samples.len() < 2 {
        return Err(LalError::domain("comparison needs at least two samples"));
    }
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let query = LalQuery::new(m, beta, alpha)?;
            let outcomes = samples
                .iter()
                .map(|(_, s)| lal(s, &query))
                .collect::<Result<_>>()?;
            Ok(ComparisonRow { alpha, outcomes })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonTable {
        m,
        beta,
        names: samples.iter().map(|(name, _)| name.clone()).collect(),
        mean_losses: samples.iter().map(|(_, s)| s.mean()).collect(),
        curves: samples
            .iter()
            .map(|(_, s)| curve_breakpoints(s, m, beta))
            .collect::<Result<_>>()?,
        rows,
    })
}
