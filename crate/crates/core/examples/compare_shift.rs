// Monitoring a deployed model under covariate shift: compare the limits of
// absolute-error losses on the training distribution and a shifted one.
//
// ```text
// cargo run --example compare_shift
// ```

use lal::curves::{compare_table, ComparisonTable};
use lal::simulate::{replicate_rng, Generator, ShiftScenario};
use lal::{BatchSize, CalibrationSample, Result};

fn draw(scenario: ShiftScenario, n: usize, seed: u64) -> Result<CalibrationSample> {
    let generator = Generator::Shift(scenario);
    let mut rng = replicate_rng(seed, 0);
    CalibrationSample::new((0..n).map(|_| generator.draw(&mut rng)).collect())
}

pub fn run(seed: u64) -> Result<ComparisonTable> {
    let samples = [
        (
            "reference".to_string(),
            draw(ShiftScenario::reference(), 30, seed)?,
        ),
        (
            "shifted".to_string(),
            draw(ShiftScenario::new(0.75, 0.75), 30, seed)?,
        ),
    ];
    let table = compare_table(&samples, BatchSize::Finite(1), 1.0, &[0.05, 0.1, 0.2, 0.3])?;
    println!("alpha  reference  shifted");
    for row in &table.rows {
        println!(
            "{:<6} {:<10.4} {:.4}",
            row.alpha, row.outcomes[0].limit, row.outcomes[1].limit
        );
    }
    for (name, mean) in table.names.iter().zip(&table.mean_losses) {
        println!("mean loss {name}: {mean:.4} (no finite-sample guarantee)");
    }
    Ok(table)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run(1).map(|_| ())
}
