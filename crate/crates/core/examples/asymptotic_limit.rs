// Large batches approach the infinite-stream limit: the miscoverage tail
// for batch size m converges to a binomial upper tail.
//
// ```text
// cargo run --release --example asymptotic_limit
// ```

use lal::combinatorics::{binomial_upper_tail_all, tail_a};
use lal::limit::{ceil_fraction, k_star_finite, k_star_infinite};
use lal::Result;

/// `(m, |a_m(k) - P[Bin(n, beta) >= k]|)` for growing m, at n = 150,
/// beta = 0.8, k = 130.
pub fn run() -> Result<Vec<(u64, f64)>> {
    let (n, beta, k, alpha) = (150, 0.8, 130, 0.1);
    let limit_tail = binomial_upper_tail_all(n, beta)?[k as usize];
    println!("P[Bin({n}, {beta}) >= {k}] = {limit_tail:.6}");
    let mut gaps = Vec::new();
    for m in [1_000u64, 10_000, 100_000, 1_000_000] {
        let a = tail_a(k, n, m, ceil_fraction(m, beta)?)?;
        let gap = (a - limit_tail).abs();
        println!(
            "m = {m:>7}: a(k) = {a:.6}, gap {gap:.2e}, k* = {}",
            k_star_finite(n, m, beta, alpha)?
        );
        gaps.push((m, gap));
    }
    println!("m = inf: k* = {}", k_star_infinite(n, beta, alpha)?);
    Ok(gaps)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
