//! Calibration losses and their order statistics.

use crate::error::{LalError, Result};

/// Sorted calibration losses `L^c_(1) <= ... <= L^c_(n)` together with the
/// support bounds that stand in for `L^c_(0)` and `L^c_(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    values: Vec<f64>,
    support_min: f64,
    support_max: f64,
}

impl CalibrationSample {
    /// Sorts `raw` and attaches unbounded support (`-inf`, `+inf`).
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        Self::with_support(raw, None, None)
    }

    /// Sorts `raw` and attaches the given support bounds, defaulting to
    /// `-inf` and `+inf`.
    pub fn with_support(
        mut raw: Vec<f64>,
        support_min: Option<f64>,
        support_max: Option<f64>,
    ) -> Result<Self> {
        if raw.is_empty() {
            return Err(LalError::EmptySample);
        }
        let min = support_min.unwrap_or(f64::NEG_INFINITY);
        let max = support_max.unwrap_or(f64::INFINITY);
        if min.is_nan() || max.is_nan() || min > max {
            return Err(LalError::domain(format!(
                "invalid support bounds [{min}, {max}]"
            )));
        }
        for (index, &value) in raw.iter().enumerate() {
            if value.is_nan() {
                return Err(LalError::NanValue { index });
            }
            if value.is_infinite() {
                return Err(LalError::domain(format!(
                    "calibration value at index {index} is infinite"
                )));
            }
            if value < min || value > max {
                return Err(LalError::OutOfSupport {
                    index,
                    value,
                    min,
                    max,
                });
            }
        }
        raw.sort_by(f64::total_cmp);
        Ok(Self {
            values: raw,
            support_min: min,
            support_max: max,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a sample holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_min(&self) -> f64 {
        self.support_min
    }

    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    /// `L^c_(k)` for `k` in `0..=n+1`; the ends are the support bounds.
    pub fn order_statistic(&self, k: u64) -> Result<f64> {
        let n = self.n();
        match k {
            0 => Ok(self.support_min),
            k if k <= n => Ok(self.values[k as usize - 1]),
            k if k == n + 1 => Ok(self.support_max),
            k => Err(LalError::domain(format!(
                "order statistic index {k} outside 0..={}",
                n + 1
            ))),
        }
    }

    pub fn has_ties(&self) -> bool {
        self.values.windows(2).any(|w| w[0] == w[1])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Same sample with every loss mapped through `x -> scale * x + shift`.
    /// `scale` must be positive so the ordering is preserved.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(LalError::domain(
                "affine map needs finite scale > 0 and finite shift",
            ));
        }
        let map = |x: f64| scale * x + shift;
        Self::with_support(
            self.values.iter().map(|&x| map(x)).collect(),
            Some(map(self.support_min)),
            Some(map(self.support_max)),
        )
    }
}
