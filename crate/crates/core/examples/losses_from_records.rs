// Turning prediction records into calibration losses with each supported
// loss function, then computing a limit from them.
//
// ```text
// cargo run --example losses_from_records
// ```

use std::path::Path;

use lal::io::ingest;
use lal::losses::{GaussianModel, LossKind, LossSpec};
use lal::{lal, BatchSize, LalQuery, Result};

pub fn run() -> Result<Vec<(LossKind, f64)>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let gaussian = GaussianModel::new(vec![0.0, 0.0], vec![1.0, 0.5, 0.5, 0.89])?;
    let cases = [
        ("regression.csv", LossSpec::simple(LossKind::Absolute)?),
        ("regression.csv", LossSpec::simple(LossKind::Squared)?),
        ("regression.csv", LossSpec::simple(LossKind::Overshoot)?),
        ("regression.csv", LossSpec::simple(LossKind::Undershoot)?),
        (
            "classification.csv",
            LossSpec::simple(LossKind::MisclassificationProb)?,
        ),
        (
            "classification.csv",
            LossSpec::simple(LossKind::CategoricalNll)?,
        ),
        ("density.csv", LossSpec::GaussianNll(gaussian)),
    ];
    let query = LalQuery::new(BatchSize::Finite(5), 0.6, 0.1)?;
    let mut limits = Vec::new();
    for (file, spec) in cases {
        let ingested = ingest(&data.join(file), None, Some(&spec), None, None)?;
        let outcome = lal(&ingested.sample, &query)?;
        println!(
            "{:<18} {:<18} limit {:>8.4}   mean {:.4}",
            file,
            spec.kind().name(),
            outcome.limit,
            ingested.sample.mean()
        );
        limits.push((spec.kind(), outcome.limit));
    }
    Ok(limits)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
