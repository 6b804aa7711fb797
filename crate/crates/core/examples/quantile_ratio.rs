// How fast the single-future-loss limit approaches the true
// `1 - alpha` quantile as the calibration set grows.
//
// ```text
// cargo run --release --example quantile_ratio
// ```

use lal::simulate::{quantile_ratio_mc, Generator, QuantileRatioConfig, QuantileRatioReport};
use lal::Result;

pub fn run(replicates: u64) -> Result<QuantileRatioReport> {
    let report = quantile_ratio_mc(&QuantileRatioConfig {
        generator: Generator::Exponential,
        n_grid: vec![20, 80, 320],
        alpha: 0.1,
        replicates,
        seed: 7,
    })?;
    println!("true quantile {:.4}", report.quantile);
    for row in &report.rows {
        println!(
            "n = {:>3}: k* = {:>3}, E[limit / quantile] = {:.4} ({:.4})",
            row.n, row.k_star, row.mean_ratio, row.std_error
        );
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run(500).map(|_| ())
}
