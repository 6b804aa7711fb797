// Monte Carlo check that the limit covers a fresh loss at the promised
// rate, using absolute residuals of the unshifted regression scenario.
//
// ```text
// cargo run --release --example coverage_study
// ```

use lal::simulate::{coverage_mc, CoverageReport, Generator, ShiftScenario, SimConfig};
use lal::Result;

pub fn run(replicates: u64) -> Result<CoverageReport> {
    let report = coverage_mc(&SimConfig {
        generator: Generator::Shift(ShiftScenario::reference()),
        n: 30,
        m: 1,
        beta: 1.0,
        alphas: vec![0.05, 0.1, 0.2, 0.3],
        replicates,
        seed: 2024,
    })?;
    println!("alpha  k*  predicted  observed  (std err)");
    for row in &report.rows {
        println!(
            "{:<6} {:<3} {:<10.4} {:<9.4} ({:.4})",
            row.alpha, row.k_star, row.predicted, row.miscoverage, row.std_error
        );
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run(2000).map(|_| ())
}
