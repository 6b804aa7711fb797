//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line with its
//! measurements and wall time; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use lal::combinatorics::{
    binomial_upper_tail_all, exact_tail_a, order_pmf, rational_to_f64, tail_a, EXACT_TAIL_CAP,
};
use lal::limit::{ceil_fraction, k_star_finite, k_star_infinite, k_star_single};
use lal::simulate::{
    coverage_mc, enumerate_interval, quantile_ratio_mc, replicate_rng, validity_check, Generator,
    QuantileRatioConfig, ShiftScenario, SimConfig,
};
use lal::{lal, BatchSize, CalibrationSample, LalQuery};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

fn report(id: u32, name: &str, ok: bool, budget_secs: u64, start: Instant, detail: String) {
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_secs);
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict}: {name} ({detail}; {:.2}s of {budget_secs}s)",
        elapsed.as_secs_f64()
    );
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its {budget_secs}s budget");
}

fn criterion_01_order_pmf_matches_enumeration() {
    let start = Instant::now();
    let (mut worst, mut cases) = (0.0f64, 0);
    for n in 1..=6 {
        for m in 1..=5 {
            for i in 1..=m {
                for j in 0..=n {
                    let exact = enumerate_interval(n, m, i, j).unwrap().to_f64();
                    worst = worst.max((order_pmf(n, m, i, j).unwrap() - exact).abs());
                    cases += 1;
                }
            }
        }
    }
    report(
        1,
        "order-statistic pmf equals exhaustive enumeration",
        worst <= 1e-12,
        5,
        start,
        format!("{cases} cases, max abs error {worst:e}"),
    );
}

fn criterion_02_limits_are_valid_and_exact() {
    let start = Instant::now();
    let (mut cases, mut failures) = (0, Vec::new());
    for n in 1..=5 {
        for m in 1..=4 {
            for beta in [0.25, 0.5, 1.0] {
                for alpha in [0.05, 0.2, 0.5] {
                    let check = validity_check(n, m, beta, alpha).unwrap();
                    cases += 1;
                    if !check.holds(alpha) {
                        failures.push((n, m, beta, alpha, check));
                    }
                }
            }
        }
    }
    report(
        2,
        "enumerated miscoverage equals a(k*) and is at most alpha",
        failures.is_empty(),
        10,
        start,
        format!("{cases} cases, failures {failures:?}"),
    );
}

fn criterion_03_partition_of_unity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (n, m) in [(150u64, 30u64), (1000, 1000), (10_000, 100)] {
        for i in [1, m.div_ceil(2), m] {
            let total: f64 = (0..=n).map(|j| order_pmf(n, m, i, j).unwrap()).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    report(
        3,
        "order-statistic pmf sums to one",
        worst <= 1e-10,
        5,
        start,
        format!("max |sum - 1| {worst:e}"),
    );
}

fn criterion_04_single_point_fast_path_agrees() {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for n in 1..=200 {
        for step in 1..=99 {
            let alpha = step as f64 / 100.0;
            let general = k_star_finite(n, 1, 1.0, alpha).unwrap();
            let fast = k_star_single(n, alpha).unwrap();
            if general != fast {
                mismatches.push((n, alpha, general, fast));
            }
        }
    }
    report(
        4,
        "general and single-point k* agree",
        mismatches.is_empty(),
        5,
        start,
        format!("19800 cases, mismatches {mismatches:?}"),
    );
}

fn criterion_05_log_space_matches_exact_arithmetic() {
    let start = Instant::now();
    let mut rng = replicate_rng(5, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..EXACT_TAIL_CAP);
        let m = rng.random_range(1..=EXACT_TAIL_CAP - n);
        let q = rng.random_range(1..=m);
        let k = rng.random_range(1..=n + 1);
        let exact = rational_to_f64(&exact_tail_a(k, n, m, q).unwrap());
        let fast = tail_a(k, n, m, q).unwrap();
        let rel = if exact == 0.0 {
            fast.abs()
        } else {
            ((fast - exact) / exact).abs()
        };
        worst = worst.max(rel);
    }
    report(
        5,
        "log-space tail equals exact rational tail",
        worst <= 1e-10,
        10,
        start,
        format!("200 random cases with n + m <= {EXACT_TAIL_CAP}, max relative error {worst:e}"),
    );
}

fn criterion_06_large_batch_converges_to_binomial_tail() {
    let start = Instant::now();
    let (n, beta, k) = (150u64, 0.8, 130u64);
    let limit = binomial_upper_tail_all(n, beta).unwrap()[k as usize];
    let gaps: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&m| (tail_a(k, n, m, ceil_fraction(m, beta).unwrap()).unwrap() - limit).abs())
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let k_big = k_star_finite(n, 1_000_000, beta, 0.1).unwrap();
    let k_inf = k_star_infinite(n, beta, 0.1).unwrap();
    report(
        6,
        "a_m(130) approaches the binomial upper tail as m grows",
        decreasing && gaps[3] <= 1e-2 && k_big == k_inf,
        5,
        start,
        format!("gaps {gaps:?}, k* at m=1e6 {k_big}, k* at m=inf {k_inf}"),
    );
}

fn criterion_07_monte_carlo_coverage_band() {
    let start = Instant::now();
    let reps = 2000u64;
    let report_mc = coverage_mc(&SimConfig {
        generator: Generator::Shift(ShiftScenario::reference()),
        n: 30,
        m: 1,
        beta: 1.0,
        alphas: vec![0.05, 0.1, 0.2, 0.3],
        replicates: reps,
        seed: 2024,
    })
    .unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for row in &report_mc.rows {
        let sigma = (row.alpha * (1.0 - row.alpha) / reps as f64).sqrt();
        let low = row.alpha - 1.0 / 31.0 - 3.0 * sigma;
        let high = row.alpha + 3.0 * sigma;
        ok &= row.miscoverage >= low && row.miscoverage <= high;
        detail.push(format!(
            "alpha {} -> {:.4} in [{low:.4}, {high:.4}]",
            row.alpha, row.miscoverage
        ));
    }
    report(
        7,
        "empirical miscoverage within the finite-sample band (unshifted regression residuals)",
        ok,
        10,
        start,
        detail.join(", "),
    );
}

fn criterion_08_limit_approaches_true_quantile() {
    let start = Instant::now();
    let study = quantile_ratio_mc(&QuantileRatioConfig {
        generator: Generator::Exponential,
        n_grid: vec![20, 80, 320],
        alpha: 0.1,
        replicates: 500,
        seed: 7,
    })
    .unwrap();
    let ratios: Vec<f64> = study.rows.iter().map(|r| r.mean_ratio).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let last = *ratios.last().unwrap();
    report(
        8,
        "E[limit / quantile] decreases in n towards one",
        decreasing && (0.98..=1.15).contains(&last),
        30,
        start,
        format!("ratios at n = 20, 80, 320: {ratios:?}"),
    );
}

fn criterion_09_shifted_covariates_raise_the_limit() {
    let start = Instant::now();
    let query = LalQuery::new(BatchSize::Finite(1), 1.0, 0.05).unwrap();
    let draw = |scenario: ShiftScenario, seed: u64, stream: u64| {
        let generator = Generator::Shift(scenario);
        let mut rng = replicate_rng(seed, stream);
        let sample =
            CalibrationSample::new((0..30).map(|_| generator.draw(&mut rng)).collect()).unwrap();
        lal(&sample, &query).unwrap().limit
    };
    let wins = (0..100u64)
        .filter(|&seed| {
            draw(ShiftScenario::new(0.75, 0.75), seed, 1)
                > draw(ShiftScenario::reference(), seed, 0)
        })
        .count();
    report(
        9,
        "shifted scenario gives the larger limit",
        wins >= 90,
        30,
        start,
        format!("{wins} of 100 seeds"),
    );
}

fn criterion_10_property_suite() {
    use common::*;
    let start = Instant::now();
    let runner = || {
        TestRunner::new(Config {
            failure_persistence: None,
            ..Config::with_cases(CASES)
        })
    };
    let outcomes = [
        (
            "monotone in alpha",
            runner()
                .run(
                    &(losses(), batch_size(), beta(), alpha(), alpha()),
                    |(v, m, b, a1, a2)| monotone_in_alpha(&v, m, b, a1, a2),
                )
                .map_err(|e| e.to_string()),
        ),
        (
            "monotone in beta",
            runner()
                .run(
                    &(losses(), batch_size(), beta(), beta(), alpha()),
                    |(v, m, b1, b2, a)| monotone_in_beta(&v, m, b1, b2, a),
                )
                .map_err(|e| e.to_string()),
        ),
        (
            "affine equivariance",
            runner()
                .run(
                    &(
                        losses(),
                        batch_size(),
                        beta(),
                        alpha(),
                        0.01f64..100.0,
                        -10.0f64..10.0,
                    ),
                    |(v, m, b, a, scale, shift)| affine_equivariance(&v, m, b, a, scale, shift),
                )
                .map_err(|e| e.to_string()),
        ),
        (
            "permutation invariance",
            runner()
                .run(
                    &(losses(), batch_size(), beta(), alpha(), 0usize..100),
                    |(v, m, b, a, r)| permutation_invariance(&v, m, b, a, r),
                )
                .map_err(|e| e.to_string()),
        ),
        (
            "curve/point agreement",
            runner()
                .run(
                    &(losses(), batch_size(), beta(), alpha()),
                    |(v, m, b, a)| curve_point_agreement(&v, m, b, a),
                )
                .map_err(|e| e.to_string()),
        ),
        (
            "determinism under a fixed seed",
            runner()
                .run(
                    &(1u64..20, 1u64..10, beta(), alpha(), any::<u64>()),
                    |(n, m, b, a, s)| determinism(n, m, b, a, s),
                )
                .map_err(|e| e.to_string()),
        ),
    ];
    let failed: Vec<String> = outcomes
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    report(
        10,
        "property suite",
        failed.is_empty(),
        60,
        start,
        format!(
            "{} properties x {CASES} cases, failures {failed:?}",
            outcomes.len()
        ),
    );
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        (
            "criterion_01_order_pmf_matches_enumeration",
            criterion_01_order_pmf_matches_enumeration,
        ),
        (
            "criterion_02_limits_are_valid_and_exact",
            criterion_02_limits_are_valid_and_exact,
        ),
        (
            "criterion_03_partition_of_unity",
            criterion_03_partition_of_unity,
        ),
        (
            "criterion_04_single_point_fast_path_agrees",
            criterion_04_single_point_fast_path_agrees,
        ),
        (
            "criterion_05_log_space_matches_exact_arithmetic",
            criterion_05_log_space_matches_exact_arithmetic,
        ),
        (
            "criterion_06_large_batch_converges_to_binomial_tail",
            criterion_06_large_batch_converges_to_binomial_tail,
        ),
        (
            "criterion_07_monte_carlo_coverage_band",
            criterion_07_monte_carlo_coverage_band,
        ),
        (
            "criterion_08_limit_approaches_true_quantile",
            criterion_08_limit_approaches_true_quantile,
        ),
        (
            "criterion_09_shifted_covariates_raise_the_limit",
            criterion_09_shifted_covariates_raise_the_limit,
        ),
        ("criterion_10_property_suite", criterion_10_property_suite),
    ];
    let failed: Vec<&str> = criteria
        .iter()
        .filter(|(_, check)| std::panic::catch_unwind(check).is_err())
        .map(|(name, _)| *name)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
