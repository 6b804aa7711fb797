// Level-alpha limits for one future loss, a batch of 30 and an infinite
// stream, from the same calibration sample.
//
// ```text
// cargo run --example single_limit
// ```

use lal::{lal, BatchSize, CalibrationSample, LalOutcome, LalQuery, Result};

pub fn run() -> Result<Vec<(BatchSize, LalOutcome)>> {
    let sample = CalibrationSample::new(vec![
        0.42, 1.31, 0.07, 0.88, 2.15, 0.63, 0.29, 1.02, 0.51, 1.77, 0.95, 0.18, 0.74, 1.46, 0.36,
        0.59, 1.12, 0.81, 0.23, 2.61,
    ])?;
    let (beta, alpha) = (0.5, 0.1);
    println!("n = {}, beta = {beta}, alpha = {alpha}", sample.n());
    let mut results = Vec::new();
    for m in [
        BatchSize::Finite(1),
        BatchSize::Finite(30),
        BatchSize::Infinite,
    ] {
        let outcome = lal(&sample, &LalQuery::new(m, beta, alpha)?)?;
        println!(
            "m = {m:>3}: k* = {:>2}, limit = {}, exact coverage = {:.4}",
            outcome.k_star, outcome.limit, outcome.exact_coverage
        );
        results.push((m, outcome));
    }
    Ok(results)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
