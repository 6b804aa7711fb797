//! Loss-file ingestion and CSV/SVG export.
//!
//! Input files are CSV with a header row, or JSON holding either a flat
//! array of numbers or an array of flat objects. Recognized columns:
//!
//! * `loss` - losses used as-is;
//! * `y`, `y_hat` - regression records;
//! * `label`, `p_0`..`p_K` - classification records (0-indexed labels);
//! * `z_0`..`z_D` - points for a Gaussian density model.
//!
//! In every text format `inf` / `-inf` stand for infinite values.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::curves::{Breakpoint, ComparisonTable, LalCurve};
use crate::error::{LalError, Result};
use crate::losses::{compute_loss, Loss, LossSpec, Record};
use crate::sample::CalibrationSample;
use crate::simulate::{CoverageReport, QuantileRatioReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Json,
}

impl FileFormat {
    /// `.json` means JSON; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => FileFormat::Json,
            _ => FileFormat::Csv,
        }
    }
}

impl FromStr for FileFormat {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            _ => Err(LalError::domain(format!("unknown input format `{s}`"))),
        }
    }
}

/// Export format for curves and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

impl FromStr for ExportFormat {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "svg" => Ok(ExportFormat::Svg),
            _ => Err(LalError::domain(format!(
                "unknown export format `{s}` (csv | svg)"
            ))),
        }
    }
}

/// Numeric table read from a loss file. `rows[i].0` is the line number (CSV)
/// or 1-based array position (JSON) used in error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub path: PathBuf,
    pub columns: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl RawTable {
    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| LalError::MissingColumn {
            path: self.path.clone(),
            column: name.to_string(),
        })
    }

    /// Indices of `prefix0`, `prefix1`, ... up to the first gap.
    fn indexed(&self, prefix: &str) -> Vec<usize> {
        (0..)
            .map_while(|i| self.column(&format!("{prefix}{i}")))
            .collect()
    }

    fn parse_error(&self, line: u64, message: impl Into<String>) -> LalError {
        LalError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }
}

/// Text form of an extended real: `inf`, `-inf`, or the shortest decimal
/// that parses back to the same `f64`.
pub fn format_value(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_value(s: &str) -> Option<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

fn parse_cell(table_path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    let value = cell.trim().parse::<f64>().map_err(|_| LalError::Parse {
        path: table_path.to_path_buf(),
        line,
        message: format!("column `{column}`: `{cell}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(LalError::Parse {
            path: table_path.to_path_buf(),
            line,
            message: format!("column `{column}`: value `{cell}` is not finite"),
        });
    }
    Ok(value)
}

fn read_csv_table(path: &Path, reader: impl Read) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        LalError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        }
    };
    let columns: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    if columns.iter().all(|c| c.is_empty()) {
        return Err(LalError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let values = record
            .iter()
            .zip(&columns)
            .map(|(cell, col)| parse_cell(path, line, col, cell))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        columns,
        rows,
    })
}

fn read_json_table(path: &Path, reader: impl Read) -> Result<RawTable> {
    let err = |index: u64, message: String| LalError::Parse {
        path: path.to_path_buf(),
        line: index,
        message,
    };
    let value: serde_json::Value = serde_json::from_reader(reader)
        .map_err(|e| err(e.line() as u64, format!("invalid JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| err(1, "top-level JSON value must be an array".into()))?;
    let number = |index: u64, v: &serde_json::Value, col: &str| -> Result<f64> {
        v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
            err(
                index,
                format!("array element {index}: `{col}` is not a finite number"),
            )
        })
    };

    let mut columns: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(items.len());
    for (pos, item) in items.iter().enumerate() {
        let index = pos as u64 + 1;
        match item {
            serde_json::Value::Object(obj) => {
                if pos == 0 {
                    columns = obj.keys().cloned().collect();
                } else if obj.len() != columns.len() || !columns.iter().all(|c| obj.contains_key(c))
                {
                    return Err(err(
                        index,
                        format!("array element {index}: keys differ from the first record"),
                    ));
                }
                let values = columns
                    .iter()
                    .map(|c| number(index, &obj[c], c))
                    .collect::<Result<Vec<_>>>()?;
                rows.push((index, values));
            }
            _ => {
                if pos == 0 {
                    columns = vec!["loss".into()];
                } else if columns != ["loss"] {
                    return Err(err(
                        index,
                        format!("array element {index}: expected an object"),
                    ));
                }
                rows.push((index, vec![number(index, item, "loss")?]));
            }
        }
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        columns,
        rows,
    })
}

/// Reads a loss or record file into a numeric table.
pub fn read_table(path: &Path, format: Option<FileFormat>) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| LalError::io(path, e))?;
    match format.unwrap_or_else(|| FileFormat::from_path(path)) {
        FileFormat::Csv => read_csv_table(path, file),
        FileFormat::Json => read_json_table(path, file),
    }
}

/// Losses computed from a table, with the lines whose NLL hit the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct TableLosses {
    pub losses: Vec<f64>,
    pub saturated_lines: Vec<u64>,
}

type RecordBuilder<'a> = Box<dyn Fn(u64, &[f64]) -> Result<Record> + 'a>;

/// Turns table rows into losses: passes a `loss` column through, or applies
/// `spec` to prediction-record columns.
pub fn table_losses(table: &RawTable, spec: Option<&LossSpec>) -> Result<TableLosses> {
    if let Some(col) = table.column("loss") {
        if let Some(spec) = spec {
            return Err(LalError::SpecMismatch(format!(
                "{}: file already has a `loss` column; the {} loss does not apply",
                table.path.display(),
                spec.kind()
            )));
        }
        return Ok(TableLosses {
            losses: table.rows.iter().map(|(_, r)| r[col]).collect(),
            saturated_lines: Vec::new(),
        });
    }
    let spec = spec.ok_or_else(|| {
        LalError::SpecMismatch(format!(
            "{}: no `loss` column; a loss kind is required for prediction records",
            table.path.display()
        ))
    })?;

    let kind = spec.kind();
    let to_record: RecordBuilder<'_> = if kind.is_regression() {
        let (y, y_hat) = (table.require("y")?, table.require("y_hat")?);
        Box::new(move |_, r| {
            Ok(Record::Regression {
                y: r[y],
                y_hat: r[y_hat],
            })
        })
    } else if kind.is_classification() {
        let label = table.require("label")?;
        let probs = table.indexed("p_");
        if probs.is_empty() {
            return Err(table.require("p_0").unwrap_err());
        }
        Box::new(move |line, r| {
            let raw = r[label];
            if raw < 0.0 || raw.fract() != 0.0 {
                return Err(table.parse_error(line, format!("label `{raw}` is not a class index")));
            }
            Ok(Record::Classification {
                probs: probs.iter().map(|&i| r[i]).collect(),
                label: raw as usize,
            })
        })
    } else {
        let coords = table.indexed("z_");
        if coords.is_empty() {
            return Err(table.require("z_0").unwrap_err());
        }
        Box::new(move |_, r| {
            Ok(Record::Density {
                z: coords.iter().map(|&i| r[i]).collect(),
            })
        })
    };

    let mut losses = Vec::with_capacity(table.rows.len());
    let mut saturated_lines = Vec::new();
    for (line, row) in &table.rows {
        let record = to_record(*line, row)?;
        let Loss { value, saturated } = compute_loss(spec, &record).map_err(|e| match e {
            LalError::Arity(_)
            | LalError::LabelOutOfRange { .. }
            | LalError::ProbabilityOutOfRange(_) => table.parse_error(*line, e.to_string()),
            other => other,
        })?;
        if saturated {
            saturated_lines.push(*line);
        }
        losses.push(value);
    }
    Ok(TableLosses {
        losses,
        saturated_lines,
    })
}

/// A calibration sample read from a file, with any NLL-saturated lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: CalibrationSample,
    pub saturated_lines: Vec<u64>,
}

pub fn ingest(
    path: &Path,
    format: Option<FileFormat>,
    spec: Option<&LossSpec>,
    support_min: Option<f64>,
    support_max: Option<f64>,
) -> Result<Ingested> {
    let table = read_table(path, format)?;
    let TableLosses {
        losses,
        saturated_lines,
    } = table_losses(&table, spec)?;
    if losses.is_empty() {
        return Err(LalError::EmptySample);
    }
    let sample = CalibrationSample::with_support(losses, support_min, support_max)?;
    Ok(Ingested {
        sample,
        saturated_lines,
    })
}

fn csv_write_err(e: csv::Error) -> LalError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LalError::io("<output>", io),
        other => LalError::domain(format!("csv write failed: {other:?}")),
    }
}

/// `alpha,limit,k,exact_coverage`, one row per breakpoint.
pub fn write_curve_csv(curve: &LalCurve, out: impl Write) -> Result<()> {
    write_breakpoints(curve.breakpoints.iter().map(|b| (b.alpha, *b)), out)
}

/// Same columns as [`write_curve_csv`], evaluated on a grid of levels.
pub fn write_curve_grid_csv(curve: &LalCurve, alphas: &[f64], out: impl Write) -> Result<()> {
    write_breakpoints(curve.sample_grid(alphas)?.into_iter(), out)
}

fn write_breakpoints(rows: impl Iterator<Item = (f64, Breakpoint)>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "limit", "k", "exact_coverage"])
        .map_err(csv_write_err)?;
    for (alpha, b) in rows {
        w.write_record([
            format_value(alpha),
            format_value(b.limit),
            b.k.to_string(),
            format_value(b.exact_coverage()),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| LalError::io("<output>", e))
}

/// Parses the breakpoint CSV written by [`write_curve_csv`].
pub fn read_curve_csv(input: impl Read) -> Result<Vec<Breakpoint>> {
    let path = PathBuf::from("<curve>");
    let table_err = |line: u64, message: String| LalError::Parse {
        path: path.clone(),
        line,
        message,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| table_err(0, e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| {
            parse_value(field(i))
                .ok_or_else(|| table_err(line, format!("bad number `{}`", field(i))))
        };
        out.push(Breakpoint {
            alpha: num(0)?,
            limit: num(1)?,
            k: field(2)
                .parse()
                .map_err(|_| table_err(line, format!("bad index `{}`", field(2))))?,
        });
    }
    Ok(out)
}

/// Long-format comparison: `sample,alpha,limit,k,exact_coverage,mean_loss`.
pub fn write_comparison_csv(table: &ComparisonTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sample",
        "alpha",
        "limit",
        "k",
        "exact_coverage",
        "mean_loss",
    ])
    .map_err(csv_write_err)?;
    for (idx, name) in table.names.iter().enumerate() {
        for row in &table.rows {
            let o = &row.outcomes[idx];
            w.write_record([
                name.clone(),
                format_value(row.alpha),
                format_value(o.limit),
                o.k_star.to_string(),
                format_value(o.exact_coverage),
                format_value(table.mean_losses[idx]),
            ])
            .map_err(csv_write_err)?;
        }
    }
    w.flush().map_err(|e| LalError::io("<output>", e))
}

pub fn write_coverage_csv(report: &CoverageReport, out: impl Write) -> Result<()> {
    let c = &report.config;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "generator",
        "seed",
        "n",
        "m",
        "beta",
        "ordinal",
        "replicates",
        "alpha",
        "k_star",
        "predicted",
        "miscoverage",
        "std_error",
        "band_low",
        "band_high",
        "mean_limit",
    ])
    .map_err(csv_write_err)?;
    for r in &report.rows {
        w.write_record([
            c.generator.to_string(),
            c.seed.to_string(),
            c.n.to_string(),
            c.m.to_string(),
            format_value(c.beta),
            report.ordinal.to_string(),
            c.replicates.to_string(),
            format_value(r.alpha),
            r.k_star.to_string(),
            format_value(r.predicted),
            format_value(r.miscoverage),
            format_value(r.std_error),
            r.band_low.map(format_value).unwrap_or_default(),
            format_value(r.band_high),
            format_value(r.mean_limit),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| LalError::io("<output>", e))
}

pub fn write_quantile_ratio_csv(report: &QuantileRatioReport, out: impl Write) -> Result<()> {
    let c = &report.config;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "generator",
        "seed",
        "alpha",
        "replicates",
        "quantile",
        "n",
        "k_star",
        "mean_ratio",
        "std_error",
    ])
    .map_err(csv_write_err)?;
    for r in &report.rows {
        w.write_record([
            c.generator.to_string(),
            c.seed.to_string(),
            format_value(c.alpha),
            c.replicates.to_string(),
            format_value(report.quantile),
            r.n.to_string(),
            r.k_star.to_string(),
            format_value(r.mean_ratio),
            format_value(r.std_error),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| LalError::io("<output>", e))
}

/// Single-column `loss` CSV, readable by [`ingest`].
pub fn write_losses_csv(losses: &[f64], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["loss"]).map_err(csv_write_err)?;
    for &l in losses {
        w.write_record([format_value(l)]).map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| LalError::io("<output>", e))
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f4e79", "#d4a017", "#b03a2e", "#1e8449", "#7d3c98", "#117a65", "#a04000", "#566573",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step curves with alpha on the vertical axis and the limit on the
/// horizontal axis. Infinite limits run off the right edge. Output depends
/// only on the input, byte for byte.
pub fn render_svg(curves: &[(&str, &LalCurve)]) -> String {
    let finite: Vec<f64> = curves
        .iter()
        .flat_map(|(_, c)| c.breakpoints.iter().map(|b| b.limit))
        .filter(|x| x.is_finite())
        .collect();
    let (mut lo, mut hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if finite.is_empty() {
        (lo, hi) = (0.0, 1.0);
    } else if lo == hi {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let right = MARGIN_LEFT + plot_w;
    let bottom = MARGIN_TOP + plot_h;
    let sx = |x: f64| {
        if x == f64::INFINITY {
            right
        } else if x == f64::NEG_INFINITY {
            MARGIN_LEFT
        } else {
            MARGIN_LEFT + (x - lo) / (hi - lo) * plot_w
        }
    };
    let sy = |a: f64| bottom - a * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=5 {
        let a = i as f64 / 5.0;
        let y = sy(a);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{a:.1}</text>"##,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 7.0,
            y + 4.0
        );
        let x_val = lo + (hi - lo) * a;
        let x = sx(x_val);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            bottom + 4.0,
            bottom + 16.0,
            tick_label(x_val)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">loss limit</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">alpha</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (idx, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = Vec::with_capacity(2 * curve.breakpoints.len() + 1);
        let mut upper = 1.0;
        for b in &curve.breakpoints {
            let x = sx(b.limit);
            points.push(format!("{x:.2},{:.2}", sy(upper)));
            if b.limit.is_infinite() {
                break;
            }
            points.push(format!("{x:.2},{:.2}", sy(b.alpha)));
            upper = b.alpha;
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 12.0 + 18.0 * idx as f64;
        let lx = right + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape_xml(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick_label(x: f64) -> String {
    let mag = x.abs();
    if mag != 0.0 && !(1e-3..1e5).contains(&mag) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

/// Something that can be written as a curve CSV or an SVG plot.
#[derive(Debug, Clone, Copy)]
pub enum Exportable<'a> {
    Curve { name: &'a str, curve: &'a LalCurve },
    Table(&'a ComparisonTable),
}

pub fn export(item: Exportable<'_>, format: ExportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| LalError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let rewrap = |e: LalError| match e {
        LalError::Io { source, .. } => LalError::io(path, source),
        other => other,
    };
    match (item, format) {
        (Exportable::Curve { curve, .. }, ExportFormat::Csv) => write_curve_csv(curve, &mut out),
        (Exportable::Table(t), ExportFormat::Csv) => write_comparison_csv(t, &mut out),
        (Exportable::Curve { name, curve }, ExportFormat::Svg) => out
            .write_all(render_svg(&[(name, curve)]).as_bytes())
            .map_err(|e| LalError::io(path, e)),
        (Exportable::Table(t), ExportFormat::Svg) => {
            let curves: Vec<(&str, &LalCurve)> = t
                .names
                .iter()
                .map(String::as_str)
                .zip(t.curves.iter())
                .collect();
            out.write_all(render_svg(&curves).as_bytes())
                .map_err(|e| LalError::io(path, e))
        }
    }
    .map_err(rewrap)?;
    out.flush().map_err(|e| LalError::io(path, e))
}
