//! Invariant checks shared by the property tests and the acceptance suite.

#![allow(dead_code)]

use lal::curves::curve_breakpoints;
use lal::simulate::{coverage_mc, Generator, SimConfig};
use lal::{lal, BatchSize, CalibrationSample, LalQuery};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 1000;

pub fn batch_size() -> impl Strategy<Value = BatchSize> {
    prop_oneof![
        3 => (1u64..=40).prop_map(BatchSize::Finite),
        1 => (41u64..=100_000).prop_map(BatchSize::Finite),
        1 => Just(BatchSize::Infinite),
    ]
}

pub fn beta() -> impl Strategy<Value = f64> {
    prop_oneof![0.01f64..=1.0, Just(1.0), Just(0.5)]
}

pub fn alpha() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

pub fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-50.0f64..50.0, 1..60),
        // Coarse values to exercise ties.
        prop::collection::vec((0u8..6).prop_map(f64::from), 1..30),
    ]
}

fn outcome(values: &[f64], m: BatchSize, beta: f64, alpha: f64) -> lal::LalOutcome {
    let sample = CalibrationSample::new(values.to_vec()).unwrap();
    lal(&sample, &LalQuery::new(m, beta, alpha).unwrap()).unwrap()
}

/// A smaller alpha never gives a smaller limit.
pub fn monotone_in_alpha(
    values: &[f64],
    m: BatchSize,
    beta: f64,
    a1: f64,
    a2: f64,
) -> Result<(), TestCaseError> {
    let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
    let strict = outcome(values, m, beta, lo);
    let loose = outcome(values, m, beta, hi);
    prop_assert!(strict.k_star >= loose.k_star);
    prop_assert!(strict.limit >= loose.limit);
    Ok(())
}

/// Bounding a larger fraction of the batch never gives a smaller limit.
pub fn monotone_in_beta(
    values: &[f64],
    m: BatchSize,
    b1: f64,
    b2: f64,
    alpha: f64,
) -> Result<(), TestCaseError> {
    let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
    let small = outcome(values, m, lo, alpha);
    let large = outcome(values, m, hi, alpha);
    prop_assert!(small.k_star <= large.k_star);
    prop_assert!(small.limit <= large.limit);
    Ok(())
}

/// Rescaling and shifting the losses moves the limit the same way.
pub fn affine_equivariance(
    values: &[f64],
    m: BatchSize,
    beta: f64,
    alpha: f64,
    scale: f64,
    shift: f64,
) -> Result<(), TestCaseError> {
    let sample = CalibrationSample::new(values.to_vec()).unwrap();
    let moved = sample.affine(scale, shift).unwrap();
    let query = LalQuery::new(m, beta, alpha).unwrap();
    let before = lal(&sample, &query).unwrap();
    let after = lal(&moved, &query).unwrap();
    prop_assert_eq!(before.k_star, after.k_star);
    if before.limit.is_finite() {
        prop_assert_eq!(after.limit, scale * before.limit + shift);
    } else {
        prop_assert_eq!(after.limit, before.limit);
    }
    Ok(())
}

/// The order of the calibration losses is irrelevant.
pub fn permutation_invariance(
    values: &[f64],
    m: BatchSize,
    beta: f64,
    alpha: f64,
    rotation: usize,
) -> Result<(), TestCaseError> {
    let mut permuted = values.to_vec();
    permuted.reverse();
    let len = permuted.len();
    permuted.rotate_left(rotation % len);
    prop_assert_eq!(
        outcome(values, m, beta, alpha),
        outcome(&permuted, m, beta, alpha)
    );
    Ok(())
}

/// Reading the curve at alpha gives the same limit as a direct query.
pub fn curve_point_agreement(
    values: &[f64],
    m: BatchSize,
    beta: f64,
    alpha: f64,
) -> Result<(), TestCaseError> {
    let sample = CalibrationSample::new(values.to_vec()).unwrap();
    let curve = curve_breakpoints(&sample, m, beta).unwrap();
    let point = curve.at(alpha).unwrap();
    let direct = outcome(values, m, beta, alpha);
    prop_assert_eq!(point.k, direct.k_star);
    prop_assert_eq!(point.limit, direct.limit);
    Ok(())
}

/// Monte Carlo runs are reproducible from the seed.
pub fn determinism(n: u64, m: u64, beta: f64, alpha: f64, seed: u64) -> Result<(), TestCaseError> {
    let config = SimConfig {
        generator: Generator::Exponential,
        n,
        m,
        beta,
        alphas: vec![alpha],
        replicates: 8,
        seed,
    };
    let first = coverage_mc(&config).unwrap();
    let second = coverage_mc(&config).unwrap();
    prop_assert_eq!(first, second);
    Ok(())
}
