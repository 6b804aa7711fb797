// Brute-force check of the closed-form probabilities: enumerate every way
// the pooled ranks can split into calibration and future losses.
//
// ```text
// cargo run --example exact_oracle
// ```

use lal::combinatorics::order_pmf;
use lal::simulate::{enumerate_interval, validity_check};
use lal::Result;

/// Largest absolute difference between enumeration and the closed form,
/// and whether every limit held its level.
pub fn run() -> Result<(f64, bool)> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for m in 1..=5 {
            for i in 1..=m {
                for j in 0..=n {
                    let diff =
                        (enumerate_interval(n, m, i, j)?.to_f64() - order_pmf(n, m, i, j)?).abs();
                    worst = worst.max(diff);
                }
            }
        }
    }
    println!("max |enumeration - closed form| over n <= 6, m <= 5: {worst:e}");

    let mut all_valid = true;
    for (n, m, beta, alpha) in [(5, 4, 0.5, 0.2), (8, 6, 0.25, 0.05), (12, 8, 1.0, 0.5)] {
        let check = validity_check(n, m, beta, alpha)?;
        println!(
            "n = {n:>2}, m = {m}, beta = {beta}, alpha = {alpha}: k* = {}, P(miss) = {} <= alpha: {}",
            check.k_star,
            check.exact,
            check.holds(alpha)
        );
        all_valid &= check.holds(alpha);
    }
    Ok((worst, all_valid))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
