//! Binomial-coefficient kernels behind the miscoverage tail `a(k)`.
//!
//! Every probability in this crate is a ratio of binomial coefficients
//!
//! ```text
//!            C(n-j+m-i, n-j) * C(j+i-1, j)
//! p(i, j) = -----------------------------
//!                     C(n+m, m)
//! ```
//!
//! which is the chance that exactly `j` of the `n` calibration losses fall
//! below the `i`-th smallest of `m` future losses. The tail
//! `a(k) = sum_{j >= k} p(q, j)` is the probability that the `q`-th future
//! order statistic exceeds the `k`-th calibration order statistic.
//!
//! Two evaluation routes exist. When `C(n+m, m)` fits in the 53-bit
//! mantissa of an `f64`, all counts are summed as integers and divided once,
//! so each returned probability is the correctly rounded value of the exact
//! rational. Otherwise terms are formed in log space and summed with a
//! running-maximum shift. [`exact_tail_a`] is an arbitrary-precision twin
//! used as a test oracle.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LalError, Result};

/// Largest denominator for which the integer route is used.
const EXACT_F64_LIMIT: u128 = 1 << 53;

/// Upper bound on `n + m` accepted by [`exact_tail_a`].
pub const EXACT_TAIL_CAP: u64 = 500;

/// Arguments up to this size use the exact binomial table.
const SMALL_TABLE_MAX: i64 = 20;

/// A probability stored as its natural logarithm. `-inf` is probability zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-probability. Values slightly above zero from round-off are
    /// clamped to zero; NaN is rejected.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(LalError::domain("log-probability is NaN"));
        }
        Ok(LogProb(value.min(0.0)))
    }

    pub fn from_prob(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(LalError::ProbabilityOutOfRange(p));
        }
        Ok(LogProb(p.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// Exact `C(b, r)` for `b <= 20`.
fn small_binomial(b: i64, r: i64) -> u64 {
    debug_assert!((0..=SMALL_TABLE_MAX).contains(&b) && (0..=b).contains(&r));
    let r = r.min(b - r) as u64;
    let b = b as u64;
    (1..=r).fold(1u64, |acc, i| acc * (b - r + i) / i)
}

/// `ln(x!) - (x ln x - x + ln(2 pi x) / 2)`, the Stirling remainder.
fn stirling_remainder(x: f64) -> f64 {
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
    if x <= 15.0 {
        let fact: f64 = (1..=(x as u64)).map(|i| i as f64).product();
        return fact.ln() - (x * x.ln() - x + LN_SQRT_2PI + 0.5 * x.ln());
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic series; at x = 16 the first dropped term is below 1e-16.
    inv * (1.0 / 12.0
        - inv2
            * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))))
}

/// Natural log of the binomial coefficient `C(b, r)`.
///
/// Any integer pair is accepted: `r < 0`, `r > b` and `b < 0` all give
/// `-inf` (a coefficient of zero). Small arguments are computed exactly.
/// Larger ones use a Stirling expansion of the log-gamma function in which
/// the leading `x ln x` parts of the three factorials are combined
/// analytically, so there is no cancellation between terms of size `b ln b`.
pub fn log_binomial(b: i64, r: i64) -> f64 {
    if b < 0 || r < 0 || r > b {
        return f64::NEG_INFINITY;
    }
    if r == 0 || r == b {
        return 0.0;
    }
    if b <= SMALL_TABLE_MAX {
        return (small_binomial(b, r) as f64).ln();
    }
    let rr = r.min(b - r);
    if rr == 1 {
        return (b as f64).ln();
    }
    let (bf, rf) = (b as f64, rr as f64);
    let sf = bf - rf;
    let lead = rf * (bf / rf).ln() - sf * (-rf / bf).ln_1p();
    let half_log = 0.5 * (bf / (2.0 * std::f64::consts::PI * rf * sf)).ln();
    lead + half_log + stirling_remainder(bf) - stirling_remainder(rf) - stirling_remainder(sf)
}

/// `C(b, r)` as an integer if it (and every intermediate) fits in `u128`.
fn binomial_u128(b: u64, r: u64) -> Option<u128> {
    if r > b {
        return Some(0);
    }
    let r = r.min(b - r);
    let mut acc: u128 = 1;
    for i in 1..=r {
        acc = acc.checked_mul((b - r + i) as u128)? / i as u128;
    }
    Some(acc)
}

fn check_nm(n: u64, m: u64) -> Result<()> {
    if n == 0 {
        return Err(LalError::domain("calibration size n must be at least 1"));
    }
    if m == 0 {
        return Err(LalError::domain("batch size m must be at least 1"));
    }
    Ok(())
}

/// Numerator count `C(n-j+m-i, n-j) * C(j+i-1, j)` in log space. `j = n+1`
/// yields `-inf` through the negative lower index.
fn log_numerator(n: u64, m: u64, i: u64, j: u64) -> f64 {
    let (n, m, i, j) = (n as i64, m as i64, i as i64, j as i64);
    log_binomial(n - j + m - i, n - j) + log_binomial(j + i - 1, j)
}

/// Integer numerators `c_0..=c_n` and denominator `C(n+m, m)`, when the
/// denominator is exactly representable as an `f64`.
fn exact_counts(n: u64, m: u64, i: u64) -> Option<(Vec<u64>, u64)> {
    let denom = binomial_u128(n + m, m)?;
    if denom > EXACT_F64_LIMIT {
        return None;
    }
    let mut counts = Vec::with_capacity(n as usize + 1);
    for j in 0..=n {
        let c = binomial_u128(n - j + m - i, n - j)? * binomial_u128(j + i - 1, j)?;
        counts.push(c as u64);
    }
    Some((counts, denom as u64))
}

/// Probability that exactly `j` calibration losses lie below the `i`-th
/// smallest of `m` future losses, i.e. `L^c_(j) <= L_(i) < L^c_(j+1)`.
/// `j = 0` refers to the lower support sentinel.
pub fn order_pmf(n: u64, m: u64, i: u64, j: u64) -> Result<f64> {
    check_nm(n, m)?;
    if i < 1 || i > m {
        return Err(LalError::domain(format!("rank i={i} outside 1..={m}")));
    }
    if j > n {
        return Err(LalError::domain(format!(
            "interval index j={j} outside 0..={n}"
        )));
    }
    if let Some(denom) = binomial_u128(n + m, m).filter(|&d| d <= EXACT_F64_LIMIT) {
        let c = binomial_u128(n - j + m - i, n - j).zip(binomial_u128(j + i - 1, j));
        if let Some((a, b)) = c {
            return Ok((a * b) as f64 / denom as f64);
        }
    }
    let lp = log_numerator(n, m, i, j) - log_binomial((n + m) as i64, m as i64);
    Ok(lp.exp().min(1.0))
}

fn check_tail_args(k: u64, n: u64, m: u64, q: u64) -> Result<()> {
    check_nm(n, m)?;
    if k < 1 || k > n + 1 {
        return Err(LalError::domain(format!(
            "index k={k} outside 1..={}",
            n + 1
        )));
    }
    if q < 1 || q > m {
        return Err(LalError::domain(format!("ordinal q={q} outside 1..={m}")));
    }
    Ok(())
}

/// The miscoverage tail `a(k) = Pr[L_(q) > L^c_(k)]` for every
/// `k = 1..=n+1`; element `k - 1` holds `a(k)`. The last element is exactly 0.
pub fn tail_a_all(n: u64, m: u64, q: u64) -> Result<Vec<f64>> {
    check_tail_args(1, n, m, q)?;
    let len = n as usize + 1;
    let mut out = vec![0.0; len];

    if let Some((counts, denom)) = exact_counts(n, m, q) {
        let mut suffix = 0u64;
        for k in (1..=n as usize).rev() {
            suffix += counts[k];
            out[k - 1] = suffix as f64 / denom as f64;
        }
        return Ok(out);
    }

    let log_denom = log_binomial((n + m) as i64, m as i64);
    // Suffix sums of exp(t_j) held as (shift, scaled sum).
    let mut shift = f64::NEG_INFINITY;
    let mut scaled = 0.0f64;
    for k in (1..=n).rev() {
        let t = log_numerator(n, m, q, k) - log_denom;
        if t > shift {
            scaled = scaled * (shift - t).exp() + 1.0;
            shift = t;
        } else {
            scaled += (t - shift).exp();
        }
        out[k as usize - 1] = (shift + scaled.ln()).exp().min(1.0);
    }
    Ok(out)
}

/// Single value of the miscoverage tail `a(k)`.
pub fn tail_a(k: u64, n: u64, m: u64, q: u64) -> Result<f64> {
    check_tail_args(k, n, m, q)?;
    Ok(tail_a_all(n, m, q)?[k as usize - 1])
}

fn big_binomial(b: i64, r: i64) -> BigUint {
    if b < 0 || r < 0 || r > b {
        return BigUint::zero();
    }
    let r = r.min(b - r) as u64;
    let b = b as u64;
    let mut acc = BigUint::one();
    for i in 1..=r {
        acc = acc * (b - r + i) / i;
    }
    acc
}

/// Exact rational `a(k)` via arbitrary-precision binomials. Limited to
/// `n + m <= 500`.
pub fn exact_tail_a(k: u64, n: u64, m: u64, q: u64) -> Result<BigRational> {
    check_tail_args(k, n, m, q)?;
    if n + m > EXACT_TAIL_CAP {
        return Err(LalError::CapExceeded {
            what: "exact_tail_a",
            cap: EXACT_TAIL_CAP,
            got: n + m,
        });
    }
    let (ni, mi, qi) = (n as i64, m as i64, q as i64);
    let mut num = BigUint::zero();
    for j in k as i64..=ni + 1 {
        num += big_binomial(ni - j + mi - qi, ni - j) * big_binomial(j + qi - 1, j);
    }
    let den = big_binomial(ni + mi, mi);
    Ok(BigRational::new(num.into(), den.into()))
}

/// Nearest-ish `f64` to a nonnegative big rational (relative error ~1e-16).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let sign = if r.numer().sign() == num_bigint::Sign::Minus {
        -1.0
    } else {
        1.0
    };
    // Scale so the integer quotient carries about 64 significant bits.
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let quotient = if shift >= 0 {
        num / (den << shift as u64)
    } else {
        (num << (-shift) as u64) / den
    };
    sign * quotient.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(shift as i32)
}

fn check_binomial_args(n: u64, beta: f64) -> Result<()> {
    if n == 0 {
        return Err(LalError::domain("binomial trial count must be at least 1"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(LalError::domain(format!(
            "binomial success probability {beta} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Binomial(n, beta) probability masses for `0..=n`, from a log-space
/// recurrence in `j`.
fn binomial_pmf_all(n: u64, beta: f64) -> Vec<f64> {
    let len = n as usize + 1;
    if beta == 1.0 {
        let mut pmf = vec![0.0; len];
        pmf[n as usize] = 1.0;
        return pmf;
    }
    let log_odds = beta.ln() - (-beta).ln_1p();
    let mut lp = n as f64 * (-beta).ln_1p();
    let mut pmf = Vec::with_capacity(len);
    pmf.push(lp.exp());
    for j in 0..n {
        lp += ((n - j) as f64 / (j + 1) as f64).ln() + log_odds;
        pmf.push(lp.exp());
    }
    pmf
}

/// `BIN(k; n, beta)` for every `k = 0..=n`.
pub fn binomial_cdf_all(n: u64, beta: f64) -> Result<Vec<f64>> {
    check_binomial_args(n, beta)?;
    let mut acc = 0.0;
    Ok(binomial_pmf_all(n, beta)
        .into_iter()
        .map(|p| {
            acc += p;
            acc.min(1.0)
        })
        .collect())
}

pub fn binomial_cdf(k: u64, n: u64, beta: f64) -> Result<f64> {
    check_binomial_args(n, beta)?;
    if k >= n {
        return Ok(1.0);
    }
    Ok(binomial_cdf_all(n, beta)?[k as usize])
}

/// Upper tails `Pr[X >= k]` for `k = 0..=n+1` of `X ~ Binomial(n, beta)`,
/// summed from the top so small tails keep full relative precision.
pub fn binomial_upper_tail_all(n: u64, beta: f64) -> Result<Vec<f64>> {
    check_binomial_args(n, beta)?;
    let pmf = binomial_pmf_all(n, beta);
    let mut out = vec![0.0; pmf.len() + 1];
    let mut acc = 0.0;
    for k in (0..pmf.len()).rev() {
        acc += pmf[k];
        out[k] = acc.min(1.0);
    }
    Ok(out)
}

/// Smallest `k` in `0..=n` with `BIN(k; n, beta) >= p`.
pub fn binomial_quantile(p: f64, n: u64, beta: f64) -> Result<u64> {
    check_binomial_args(n, beta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(LalError::ProbabilityOutOfRange(p));
    }
    if beta == 1.0 {
        return Ok(if p == 0.0 { 0 } else { n });
    }
    let cdf = binomial_cdf_all(n, beta)?;
    // Round-off can leave cdf(n) a hair below 1; n is then the answer.
    Ok(cdf.iter().position(|&c| c >= p).unwrap_or(n as usize) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn log_binomial_small_values() {
        assert!((log_binomial(6, 2) - 15f64.ln()).abs() < 1e-15);
        assert_eq!(log_binomial(5, -1), f64::NEG_INFINITY);
        assert_eq!(log_binomial(5, 6), f64::NEG_INFINITY);
        assert_eq!(log_binomial(-1, 0), f64::NEG_INFINITY);
        assert_eq!(log_binomial(0, 0), 0.0);
    }

    #[test]
    fn log_binomial_large_matches_falling_factorial() {
        // ln C(10100, 100) = sum_{i=1}^{100} ln((10000 + i) / i)
        let oracle: f64 = (1..=100)
            .map(|i| ((10_000 + i) as f64 / i as f64).ln())
            .sum();
        let got = log_binomial(10_100, 100);
        assert!(got.is_finite());
        assert!(((got - oracle) / oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn log_binomial_across_threshold_matches_big_integers() {
        for b in 15..60i64 {
            for r in 0..=b {
                let exact = big_binomial(b, r).to_f64().unwrap().ln();
                let got = log_binomial(b, r);
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "C({b},{r})"
                );
            }
        }
    }

    #[test]
    fn order_pmf_examples() {
        assert_eq!(order_pmf(1, 1, 1, 0).unwrap(), 0.5);
        assert_eq!(order_pmf(4, 2, 2, 4).unwrap(), 5.0 / 15.0);
        assert_eq!(order_pmf(4, 2, 2, 0).unwrap(), 1.0 / 15.0);
        assert!(order_pmf(4, 2, 3, 0).is_err());
        assert!(order_pmf(4, 2, 0, 0).is_err());
        assert!(order_pmf(4, 2, 1, 5).is_err());
    }

    #[test]
    fn tail_examples() {
        assert_eq!(tail_a(4, 4, 2, 2).unwrap(), 1.0 / 3.0);
        assert_eq!(tail_a(8, 9, 1, 1).unwrap(), 0.2);
        for (n, m, q) in [(4, 2, 2), (9, 1, 1), (150, 30, 24), (40, 1000, 1)] {
            assert_eq!(tail_a(n + 1, n, m, q).unwrap(), 0.0);
        }
        assert!(tail_a(0, 4, 2, 2).is_err());
        assert!(tail_a(6, 4, 2, 2).is_err());
        assert!(tail_a(1, 4, 2, 3).is_err());
    }

    #[test]
    fn m_one_closed_form() {
        for n in 1..=200u64 {
            let a = tail_a_all(n, 1, 1).unwrap();
            for k in 1..=n + 1 {
                let want = (n + 1 - k) as f64 / (n + 1) as f64;
                assert!((a[k as usize - 1] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_tail_examples() {
        assert_eq!(exact_tail_a(1, 4, 2, 2).unwrap(), ratio(14, 15));
        assert_eq!(exact_tail_a(5, 4, 2, 2).unwrap(), ratio(0, 1));
        assert_eq!(exact_tail_a(4, 4, 2, 2).unwrap(), ratio(1, 3));
        assert!(matches!(
            exact_tail_a(1, 300, 201, 1),
            Err(LalError::CapExceeded { .. })
        ));
    }

    #[test]
    fn log_route_agrees_with_exact_route() {
        // (60, 60) has C(120, 60) > 2^53, forcing the log-space route.
        let (n, m, q) = (60, 60, 31);
        assert!(exact_counts(n, m, q).is_none());
        let a = tail_a_all(n, m, q).unwrap();
        for k in 1..=n {
            let exact = rational_to_f64(&exact_tail_a(k, n, m, q).unwrap());
            assert!(((a[k as usize - 1] - exact) / exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(rational_to_f64(&ratio(1, 3)), 1.0 / 3.0);
        assert_eq!(rational_to_f64(&ratio(14, 15)), 14.0 / 15.0);
        let big = BigRational::new(BigInt::from(1), BigInt::from(10).pow(200));
        assert!((rational_to_f64(&big) / 1e-200 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binomial_quantile_examples() {
        assert_eq!(binomial_quantile(0.0, 10, 0.5).unwrap(), 0);
        assert_eq!(binomial_quantile(0.95, 10, 1.0).unwrap(), 10);
        assert_eq!(binomial_quantile(1.0, 10, 0.5).unwrap(), 10);
        assert!(binomial_quantile(1.1, 10, 0.5).is_err());
        assert!(binomial_quantile(0.5, 0, 0.5).is_err());
        assert!(binomial_quantile(0.5, 10, 0.0).is_err());
    }

    #[test]
    fn binomial_quantile_matches_exact_cumulative_sum() {
        // Exact cdf of Binomial(150, 4/5) with big rationals.
        let n = 150i64;
        let mut cdf = BigRational::zero();
        let target = ratio(95, 100);
        let mut expected = None;
        for k in 0..=n {
            let term = BigRational::from_integer(big_binomial(n, k).into())
                * ratio(4, 5).pow(k as i32)
                * ratio(1, 5).pow((n - k) as i32);
            cdf += term;
            if cdf >= target {
                expected = Some(k as u64);
                break;
            }
        }
        let expected = expected.unwrap();
        assert_eq!(expected, 128);
        assert_eq!(binomial_quantile(0.95, 150, 0.8).unwrap(), expected);
    }

    #[test]
    fn upper_tail_complements_cdf() {
        let cdf = binomial_cdf_all(40, 0.3).unwrap();
        let upper = binomial_upper_tail_all(40, 0.3).unwrap();
        assert_eq!(upper[41], 0.0);
        assert!((upper[0] - 1.0).abs() < 1e-14);
        for k in 1..=40usize {
            assert!((upper[k] - (1.0 - cdf[k - 1])).abs() < 1e-14);
        }
        assert_eq!(binomial_cdf(40, 40, 0.3).unwrap(), 1.0);
    }
}
