// The exact LAL-curve of a loss file, exported as CSV and SVG.
//
// ```text
// cargo run --example lal_curve -- /tmp/curve-out
// ```

use std::path::{Path, PathBuf};

use lal::curves::{curve_breakpoints, LalCurve};
use lal::io::{export, ingest, ExportFormat, Exportable};
use lal::{BatchSize, Result};

pub fn run(out_dir: &Path) -> Result<(LalCurve, Vec<PathBuf>)> {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/model_a.csv");
    let sample = ingest(&input, None, None, Some(0.0), None)?.sample;
    let curve = curve_breakpoints(&sample, BatchSize::Finite(10), 0.9)?;
    for b in curve.breakpoints.iter().rev().take(5) {
        println!(
            "k = {:>2}: limit {} for alpha >= {:.4}",
            b.k, b.limit, b.alpha
        );
    }
    std::fs::create_dir_all(out_dir).map_err(|e| lal::LalError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for (format, file) in [
        (ExportFormat::Csv, "curve.csv"),
        (ExportFormat::Svg, "curve.svg"),
    ] {
        let path = out_dir.join(file);
        export(
            Exportable::Curve {
                name: "model_a",
                curve: &curve,
            },
            format,
            &path,
        )?;
        println!("wrote {}", path.display());
        written.push(path);
    }
    Ok((curve, written))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "lal-curve-out".into());
    run(&dir).map(|_| ())
}
