//! Verification harnesses: an exhaustive enumeration oracle, Monte Carlo
//! coverage, and a quantile-ratio study.
//!
//! # Random numbers
//!
//! Every replicate draws from its own ChaCha8 stream. The generator is
//! keyed by `seed` (expanded with `SeedableRng::seed_from_u64`) and the
//! 64-bit stream id selects the replicate, so replicate `r` sees the same
//! numbers no matter how many other replicates run or in which order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::combinatorics::tail_a_all;
use crate::error::{LalError, Result};
use crate::limit::{ceil_fraction, k_star_finite, k_star_single};

/// Largest `n + m` the enumeration oracle accepts.
pub const ENUMERATION_CAP: u64 = 22;

/// Draws used to estimate a quantile when no closed form is known.
pub const NUMERICAL_QUANTILE_DRAWS: usize = 100_000;

/// Quadratic `theta_0 + theta_1 x + theta_2 x^2` fitted by least squares to
/// `n0 = 100` draws of the shift-scenario data model with `mu = 1`,
/// `sigma = 0.5`, generated from [`training_draw`] with seed 0. The
/// `fit_shift_model` example reproduces these values.
pub const SHIFT_MODEL_COEFFS: [f64; 3] =
    [0.7334143725342236, -4.404617796143123, 3.4540001580970476];

/// RNG for replicate (stream) `stream` under `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An exact probability `count / total` from enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactFraction {
    pub count: u64,
    pub total: u64,
}

impl ExactFraction {
    pub fn to_f64(self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

impl fmt::Display for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.count, self.total)
    }
}

/// Visits every placement of the `m` future losses among `n + m` distinct
/// ranked values. `visit` receives, for each future order statistic
/// `i = 1..=m` (index `i - 1`), how many calibration losses lie below it.
fn for_each_partition(n: u64, m: u64, mut visit: impl FnMut(&[u64])) -> Result<u64> {
    if n == 0 || m == 0 {
        return Err(LalError::domain("enumeration needs n >= 1 and m >= 1"));
    }
    if n + m > ENUMERATION_CAP {
        return Err(LalError::CapExceeded {
            what: "enumeration oracle",
            cap: ENUMERATION_CAP,
            got: n + m,
        });
    }
    let width = (n + m) as u32;
    let mut below = vec![0u64; m as usize];
    let mut set: u32 = (1u32 << m) - 1;
    let mut total = 0u64;
    while set < (1u32 << width) {
        let mut rank = 0usize;
        for pos in 0..width {
            if set & (1 << pos) != 0 {
                below[rank] = pos as u64 - rank as u64;
                rank += 1;
            }
        }
        visit(&below);
        total += 1;
        // Next subset with the same popcount.
        let low = set & set.wrapping_neg();
        let ripple = set + low;
        set = (((ripple ^ set) >> 2) / low) | ripple;
    }
    Ok(total)
}

/// Exact `Pr[L^c_(j) <= L_(i) < L^c_(j+1)]` by enumerating all
/// `C(n+m, m)` equally likely partitions.
pub fn enumerate_interval(n: u64, m: u64, i: u64, j: u64) -> Result<ExactFraction> {
    if i < 1 || i > m || j > n {
        return Err(LalError::domain(format!("need 1 <= i <= {m} and j <= {n}")));
    }
    let mut count = 0;
    let total = for_each_partition(n, m, |below| {
        if below[i as usize - 1] == j {
            count += 1;
        }
    })?;
    Ok(ExactFraction { count, total })
}

/// Exact `Pr[L_(q) > L^c_(k)]` by enumeration, `k` in `1..=n+1`.
pub fn enumerate_miscoverage(n: u64, m: u64, q: u64, k: u64) -> Result<ExactFraction> {
    if q < 1 || q > m || k < 1 || k > n + 1 {
        return Err(LalError::domain(format!(
            "need 1 <= q <= {m} and 1 <= k <= {}",
            n + 1
        )));
    }
    let mut count = 0;
    let total = for_each_partition(n, m, |below| {
        if below[q as usize - 1] >= k {
            count += 1;
        }
    })?;
    Ok(ExactFraction { count, total })
}

/// Enumeration check of one limit: the chosen `k*`, the tail `a(k*)` the
/// library reports, and the exact miscoverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityCheck {
    pub k_star: u64,
    pub ordinal: u64,
    pub tail_at_k_star: f64,
    pub exact: ExactFraction,
}

impl ValidityCheck {
    /// Enumerated miscoverage equals `a(k*)` and does not exceed `alpha`.
    pub fn holds(&self, alpha: f64) -> bool {
        self.exact.to_f64() == self.tail_at_k_star && self.exact.to_f64() <= alpha
    }
}

pub fn validity_check(n: u64, m: u64, beta: f64, alpha: f64) -> Result<ValidityCheck> {
    let k_star = k_star_finite(n, m, beta, alpha)?;
    let ordinal = ceil_fraction(m, beta)?;
    let tail = tail_a_all(n, m, ordinal)?;
    Ok(ValidityCheck {
        k_star,
        ordinal,
        tail_at_k_star: tail[k_star as usize - 1],
        exact: enumerate_miscoverage(n, m, ordinal, k_star)?,
    })
}

/// Regression data model with a shifted covariate: `X ~ N(mu, sigma^2)`,
/// `Y | X = x ~ N(x(x-1)(x+1), 1)`, scored by the absolute error of a fixed
/// quadratic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftScenario {
    pub mu: f64,
    pub sigma: f64,
    pub coeffs: [f64; 3],
}

impl ShiftScenario {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self {
            mu,
            sigma,
            coeffs: SHIFT_MODEL_COEFFS,
        }
    }

    /// Unshifted distribution the model was fitted on.
    pub fn reference() -> Self {
        Self::new(1.0, 0.5)
    }

    pub fn draw_point(&self, rng: &mut impl Rng) -> (f64, f64) {
        let z: f64 = rng.sample(StandardNormal);
        let x = self.mu + self.sigma * z;
        let noise: f64 = rng.sample(StandardNormal);
        (x, x * (x - 1.0) * (x + 1.0) + noise)
    }

    pub fn predict(&self, x: f64) -> f64 {
        let [t0, t1, t2] = self.coeffs;
        t0 + t1 * x + t2 * x * x
    }
}

/// `n0` training points `(x, y)` from stream 0 of `seed`.
pub fn training_draw(scenario: &ShiftScenario, seed: u64, n0: usize) -> Vec<(f64, f64)> {
    let mut rng = replicate_rng(seed, 0);
    (0..n0).map(|_| scenario.draw_point(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// Standard normal losses.
    IidNormal,
    /// Exponential(1) losses.
    Exponential,
    /// Absolute residuals of the fixed quadratic under a shifted covariate.
    Shift(ShiftScenario),
    /// Every loss equals the constant.
    Constant(f64),
}

impl Generator {
    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Generator::IidNormal => rng.sample(StandardNormal),
            Generator::Exponential => rng.sample(Exp1),
            Generator::Shift(s) => {
                let (x, y) = s.draw_point(rng);
                (y - s.predict(x)).abs()
            }
            Generator::Constant(c) => *c,
        }
    }

    /// Closed-form quantile function where one exists.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        match self {
            Generator::Exponential => Some(-(-p).ln_1p()),
            Generator::Constant(c) => Some(*c),
            Generator::IidNormal | Generator::Shift(_) => None,
        }
    }

    /// Closed-form quantile, or the empirical quantile of
    /// [`NUMERICAL_QUANTILE_DRAWS`] draws from the last stream of `seed`.
    pub fn quantile_or_estimate(&self, p: f64, seed: u64) -> f64 {
        if let Some(q) = self.quantile(p) {
            return q;
        }
        let mut rng = replicate_rng(seed, u64::MAX);
        let mut draws: Vec<f64> = (0..NUMERICAL_QUANTILE_DRAWS)
            .map(|_| self.draw(&mut rng))
            .collect();
        draws.sort_by(f64::total_cmp);
        let idx = ((p * draws.len() as f64).ceil() as usize).clamp(1, draws.len()) - 1;
        draws[idx]
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Generator::Constant(_))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::IidNormal => f.write_str("normal"),
            Generator::Exponential => f.write_str("exponential"),
            Generator::Shift(s) => write!(f, "shift:{}:{}", s.mu, s.sigma),
            Generator::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| LalError::domain(format!("bad number `{p}` in generator `{s}`")))
        };
        match parts.as_slice() {
            ["normal"] => Ok(Generator::IidNormal),
            ["exponential"] => Ok(Generator::Exponential),
            ["shift", mu, sigma] => {
                let (mu, sigma) = (num(mu)?, num(sigma)?);
                if sigma <= 0.0 {
                    return Err(LalError::domain("shift scenario needs sigma > 0"));
                }
                Ok(Generator::Shift(ShiftScenario::new(mu, sigma)))
            }
            ["constant", c] => Ok(Generator::Constant(num(c)?)),
            _ => Err(LalError::domain(format!(
                "unknown generator `{s}` (normal | exponential | shift:MU:SIGMA | constant:C)"
            ))),
        }
    }
}

/// Monte Carlo coverage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub generator: Generator,
    pub n: u64,
    pub m: u64,
    pub beta: f64,
    pub alphas: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(LalError::domain("simulation needs n >= 1 and m >= 1"));
        }
        if self.replicates == 0 {
            return Err(LalError::domain("simulation needs at least one replicate"));
        }
        if self.alphas.is_empty() {
            return Err(LalError::domain("simulation needs at least one alpha"));
        }
        ceil_fraction(self.m, self.beta)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub alpha: f64,
    pub k_star: u64,
    /// `a(k*)`, the miscoverage the theory predicts without ties.
    pub predicted: f64,
    pub miscoverage: f64,
    /// `sqrt(p (1 - p) / replicates)` at the empirical miscoverage `p`.
    pub std_error: f64,
    /// `alpha - 1/(n+1)`, reported for `m = 1` only.
    pub band_low: Option<f64>,
    pub band_high: f64,
    /// Mean of the limit over replicates (`inf` if any limit was infinite).
    pub mean_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub config: SimConfig,
    pub ordinal: u64,
    pub rows: Vec<CoverageRow>,
}

/// Draws `n` calibration and `m` future losses per replicate and records
/// how often the `ceil(m beta)`-th future loss exceeds the limit.
pub fn coverage_mc(config: &SimConfig) -> Result<CoverageReport> {
    config.validate()?;
    let (n, m) = (config.n, config.m);
    let ordinal = ceil_fraction(m, config.beta)?;
    let tail = tail_a_all(n, m, ordinal)?;
    let k_stars = config
        .alphas
        .iter()
        .map(|&a| k_star_finite(n, m, config.beta, a))
        .collect::<Result<Vec<_>>>()?;

    let mut misses = vec![0u64; config.alphas.len()];
    let mut limit_sums = vec![0.0f64; config.alphas.len()];
    let mut calib = Vec::with_capacity(n as usize);
    let mut future = Vec::with_capacity(m as usize);
    for rep in 0..config.replicates {
        let mut rng = replicate_rng(config.seed, rep);
        calib.clear();
        future.clear();
        calib.extend((0..n).map(|_| config.generator.draw(&mut rng)));
        future.extend((0..m).map(|_| config.generator.draw(&mut rng)));
        calib.sort_by(f64::total_cmp);
        future.sort_by(f64::total_cmp);
        let bounded = future[ordinal as usize - 1];
        for (idx, &k) in k_stars.iter().enumerate() {
            let limit = if k > n {
                f64::INFINITY
            } else {
                calib[k as usize - 1]
            };
            if bounded > limit {
                misses[idx] += 1;
            }
            limit_sums[idx] += limit;
        }
    }

    let reps = config.replicates as f64;
    let rows = config
        .alphas
        .iter()
        .enumerate()
        .map(|(idx, &alpha)| {
            let p = misses[idx] as f64 / reps;
            CoverageRow {
                alpha,
                k_star: k_stars[idx],
                predicted: tail[k_stars[idx] as usize - 1],
                miscoverage: p,
                std_error: (p * (1.0 - p) / reps).sqrt(),
                band_low: (m == 1).then(|| alpha - 1.0 / (n + 1) as f64),
                band_high: alpha,
                mean_limit: limit_sums[idx] / reps,
            }
        })
        .collect();
    Ok(CoverageReport {
        config: config.clone(),
        ordinal,
        rows,
    })
}

/// Study of `E[lambda / F^{-1}(1 - alpha)]` for a single future loss as the
/// calibration size grows.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRatioConfig {
    pub generator: Generator,
    pub n_grid: Vec<u64>,
    pub alpha: f64,
    pub replicates: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRatioRow {
    pub n: u64,
    pub k_star: u64,
    pub mean_ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRatioReport {
    pub config: QuantileRatioConfig,
    /// `F^{-1}(1 - alpha)`, closed form or estimated.
    pub quantile: f64,
    pub rows: Vec<QuantileRatioRow>,
}

pub fn quantile_ratio_mc(config: &QuantileRatioConfig) -> Result<QuantileRatioReport> {
    if config.replicates == 0 || config.n_grid.is_empty() || config.n_grid.contains(&0) {
        return Err(LalError::domain(
            "quantile study needs replicates >= 1 and a nonempty grid of n >= 1",
        ));
    }
    if config.n_grid.len() as u64 > u32::MAX as u64 || config.replicates > u32::MAX as u64 {
        return Err(LalError::domain(
            "quantile study grid or replicate count too large",
        ));
    }
    let quantile = config
        .generator
        .quantile_or_estimate(1.0 - config.alpha, config.seed);
    if !(quantile > 0.0) {
        return Err(LalError::domain(format!(
            "ratio undefined: the {} quantile of {} is {quantile}",
            1.0 - config.alpha,
            config.generator
        )));
    }
    let reps = config.replicates as f64;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    let mut calib = Vec::new();
    for (grid_idx, &n) in config.n_grid.iter().enumerate() {
        let k_star = k_star_single(n, config.alpha)?;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for rep in 0..config.replicates {
            let mut rng = replicate_rng(config.seed, ((grid_idx as u64) << 32) | rep);
            calib.clear();
            calib.extend((0..n).map(|_| config.generator.draw(&mut rng)));
            calib.sort_by(f64::total_cmp);
            let limit = if k_star > n {
                f64::INFINITY
            } else {
                calib[k_star as usize - 1]
            };
            let ratio = limit / quantile;
            sum += ratio;
            sum_sq += ratio * ratio;
        }
        let mean = sum / reps;
        let var = if config.replicates > 1 {
            ((sum_sq - reps * mean * mean) / (reps - 1.0)).max(0.0)
        } else {
            0.0
        };
        rows.push(QuantileRatioRow {
            n,
            k_star,
            mean_ratio: mean,
            std_error: (var / reps).sqrt(),
        });
    }
    Ok(QuantileRatioReport {
        config: config.clone(),
        quantile,
        rows,
    })
}
