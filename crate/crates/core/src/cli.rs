//! Command-line front end used by the `lal` binary.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or parameter
//! values), 2 for data errors (unreadable or malformed input, unwritable
//! output).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::combinatorics::order_pmf;
use crate::curves::{compare_table, curve_breakpoints, AlphaGrid};
use crate::error::{LalError, Result};
use crate::io::{
    export, format_value, ingest, read_table, table_losses, write_comparison_csv,
    write_coverage_csv, write_curve_csv, write_curve_grid_csv, write_losses_csv,
    write_quantile_ratio_csv, ExportFormat, Exportable, FileFormat, Ingested,
};
use crate::limit::{lal, BatchSize, LalQuery};
use crate::losses::{GaussianModel, LossKind, LossSpec};
use crate::simulate::{
    coverage_mc, enumerate_interval, quantile_ratio_mc, validity_check, Generator,
    QuantileRatioConfig, SimConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lal",
    version,
    about = "Distribution-free level-alpha limits on out-of-sample losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one limit from a calibration file.
    Limit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        batch: BatchArgs,
        /// Level in (0, 1); the guarantee holds with probability 1 - alpha.
        #[arg(long)]
        alpha: f64,
    },
    /// Write the exact LAL-curve of one calibration file.
    Curve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        batch: BatchArgs,
        /// Evaluate on `start:end:step` instead of listing breakpoints.
        #[arg(long)]
        alpha_grid: Option<AlphaGrid>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare limits of several calibration files.
    Compare {
        /// `name=path`, repeated for every sample.
        #[arg(long = "input", required = true, value_parser = parse_named)]
        inputs: Vec<(String, PathBuf)>,
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        support: SupportArgs,
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, default_value = "0.01:0.5:0.01")]
        alpha_grid: AlphaGrid,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Apply a loss function to prediction records and write a `loss` CSV.
    Losses {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input_format: Option<FileFormat>,
        #[command(flatten)]
        loss: LossArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verification harnesses.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Monte Carlo miscoverage of the limit.
    Coverage {
        #[command(flatten)]
        common: SimArgs,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, conflicts_with = "alpha_grid")]
        alpha: Option<f64>,
        #[arg(long)]
        alpha_grid: Option<AlphaGrid>,
    },
    /// Mean ratio of the single-point limit to the true quantile, per n.
    QuantileRatio {
        #[command(flatten)]
        common: SimArgs,
        /// Comma-separated calibration sizes.
        #[arg(long, value_delimiter = ',', default_value = "20,80,320")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
    /// Exact enumeration over all partitions (n + m <= 22).
    Oracle {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        /// Future rank for the interval event; needs --j.
        #[arg(long, requires = "j", conflicts_with_all = ["beta", "alpha"])]
        i: Option<u64>,
        #[arg(long, requires = "i")]
        j: Option<u64>,
        /// Check the limit at (beta, alpha) instead.
        #[arg(long, requires = "alpha")]
        beta: Option<f64>,
        #[arg(long, requires = "beta")]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    /// normal | exponential | shift:MU:SIGMA | constant:C
    #[arg(long)]
    generator: Generator,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV or JSON file with a `loss` column or prediction records.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the file extension (`.json` or CSV).
    #[arg(long)]
    input_format: Option<FileFormat>,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    support: SupportArgs,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// Loss applied to prediction records: absolute, squared, overshoot,
    /// undershoot, misclassification, categorical-nll, gaussian-nll.
    #[arg(long)]
    loss: Option<LossKind>,
    /// Gaussian mean, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mean: Option<Vec<f64>>,
    /// Gaussian covariance, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    cov: Option<String>,
}

#[derive(Debug, Args)]
struct SupportArgs {
    /// Lower bound of the loss support [default: -inf].
    #[arg(long, allow_hyphen_values = true)]
    support_min: Option<f64>,
    /// Upper bound of the loss support, returned when no calibration loss
    /// is large enough [default: inf].
    #[arg(long, allow_hyphen_values = true)]
    support_max: Option<f64>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Number of future losses: a positive integer or `inf`.
    #[arg(long, default_value = "1")]
    m: BatchSize,
    /// Fraction of the future losses the limit must bound, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
    /// Output file; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_named(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

impl LossArgs {
    fn spec(&self) -> Result<Option<LossSpec>> {
        let Some(kind) = self.loss else {
            return Ok(None);
        };
        if kind != LossKind::GaussianNll {
            return LossSpec::simple(kind).map(Some);
        }
        let (Some(mean), Some(cov)) = (&self.mean, &self.cov) else {
            return Err(LalError::domain("gaussian-nll needs --mean and --cov"));
        };
        let entries = cov
            .split(';')
            .flat_map(|row| row.split(','))
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| LalError::domain(format!("cannot parse covariance `{cov}`")))?;
        Ok(Some(LossSpec::GaussianNll(GaussianModel::new(
            mean.clone(),
            entries,
        )?)))
    }
}

fn exit_code(err: &LalError) -> i32 {
    match err {
        LalError::Domain(_) | LalError::CapExceeded { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn load(input: &InputArgs, err: &mut dyn Write) -> Result<Ingested> {
    let spec = input.loss.spec()?;
    let ingested = ingest(
        &input.input,
        input.input_format,
        spec.as_ref(),
        input.support.support_min,
        input.support.support_max,
    )?;
    warn_saturated(&input.input, &ingested.saturated_lines, err);
    Ok(ingested)
}

fn warn_saturated(path: &Path, lines: &[u64], err: &mut dyn Write) {
    if !lines.is_empty() {
        let list: Vec<String> = lines.iter().map(u64::to_string).collect();
        let _ = writeln!(
            err,
            "warning: {}: {} record(s) hit the NLL probability floor (lines {})",
            path.display(),
            lines.len(),
            list.join(", ")
        );
    }
}

fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| LalError::io(path, e))?;
            let mut out = BufWriter::new(file);
            write(&mut out).map_err(|e| match e {
                LalError::Io { source, .. } => LalError::io(path, source),
                other => other,
            })?;
            out.flush().map_err(|e| LalError::io(path, e))
        }
        None => write(stdout),
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Limit {
            input,
            batch,
            alpha,
        } => {
            let query = LalQuery::new(batch.m, batch.beta, alpha)?;
            let Ingested { sample, .. } = load(&input, err)?;
            let o = lal(&sample, &query)?;
            let _ = writeln!(out, "n              {}", sample.n());
            let _ = writeln!(out, "m              {}", batch.m);
            let _ = writeln!(out, "beta           {}", format_value(batch.beta));
            if let Some(q) = o.ordinal {
                let _ = writeln!(out, "ordinal        {q}");
            }
            let _ = writeln!(out, "alpha          {}", format_value(alpha));
            let _ = writeln!(out, "k_star         {}", o.k_star);
            let _ = writeln!(out, "limit          {}", format_value(o.limit));
            let note = if o.conservative_under_ties {
                " (conservative under ties)"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "exact_coverage {}{note}",
                format_value(o.exact_coverage)
            );
            let _ = writeln!(
                out,
                "mean_loss      {} (no finite-sample guarantee)",
                format_value(sample.mean())
            );
            Ok(())
        }
        Command::Curve {
            input,
            batch,
            alpha_grid,
            output,
        } => {
            let Ingested { sample, .. } = load(&input, err)?;
            let curve = curve_breakpoints(&sample, batch.m, batch.beta)?;
            match (output.format, &output.out, &alpha_grid) {
                (ExportFormat::Csv, path, Some(grid)) => with_output(path.as_deref(), out, |w| {
                    write_curve_grid_csv(&curve, &grid.0, w)
                }),
                (ExportFormat::Csv, None, None) => write_curve_csv(&curve, out),
                (format, Some(path), _) => {
                    let name = input
                        .input
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("sample")
                        .to_string();
                    export(
                        Exportable::Curve {
                            name: &name,
                            curve: &curve,
                        },
                        format,
                        path,
                    )
                }
                (ExportFormat::Svg, None, _) => {
                    let name = input.input.display().to_string();
                    out.write_all(crate::io::render_svg(&[(&name, &curve)]).as_bytes())
                        .map_err(|e| LalError::io("<stdout>", e))
                }
            }
        }
        Command::Compare {
            inputs,
            loss,
            support,
            batch,
            alpha_grid,
            output,
        } => {
            let spec = loss.spec()?;
            let mut samples = Vec::with_capacity(inputs.len());
            for (name, path) in inputs {
                let ingested = ingest(
                    &path,
                    None,
                    spec.as_ref(),
                    support.support_min,
                    support.support_max,
                )?;
                warn_saturated(&path, &ingested.saturated_lines, err);
                samples.push((name, ingested.sample));
            }
            let table = compare_table(&samples, batch.m, batch.beta, &alpha_grid.0)?;
            for (name, mean) in table.names.iter().zip(&table.mean_losses) {
                let _ = writeln!(
                    err,
                    "{name}: mean calibration loss {} (no finite-sample guarantee)",
                    format_value(*mean)
                );
            }
            match (output.format, &output.out) {
                (format, Some(path)) => export(Exportable::Table(&table), format, path),
                (ExportFormat::Csv, None) => write_comparison_csv(&table, out),
                (ExportFormat::Svg, None) => {
                    let curves: Vec<_> = table
                        .names
                        .iter()
                        .map(String::as_str)
                        .zip(table.curves.iter())
                        .collect();
                    out.write_all(crate::io::render_svg(&curves).as_bytes())
                        .map_err(|e| LalError::io("<stdout>", e))
                }
            }
        }
        Command::Losses {
            input,
            input_format,
            loss,
            out: path,
        } => {
            let spec = loss
                .spec()?
                .ok_or_else(|| LalError::domain("--loss is required"))?;
            let table = read_table(&input, input_format)?;
            let computed = table_losses(&table, Some(&spec))?;
            warn_saturated(&input, &computed.saturated_lines, err);
            with_output(path.as_deref(), out, |w| {
                write_losses_csv(&computed.losses, w)
            })
        }
        Command::Simulate(sim) => execute_simulate(sim, out),
    }
}

fn execute_simulate(command: SimulateCommand, out: &mut dyn Write) -> Result<()> {
    match command {
        SimulateCommand::Coverage {
            common,
            n,
            m,
            beta,
            alpha,
            alpha_grid,
        } => {
            let alphas = match (alpha, alpha_grid) {
                (Some(a), _) => vec![a],
                (None, Some(grid)) => grid.0,
                (None, None) => vec![0.05, 0.1, 0.2, 0.3],
            };
            for &a in &alphas {
                LalQuery::new(BatchSize::Finite(m.max(1)), beta, a)?;
            }
            let report = coverage_mc(&SimConfig {
                generator: common.generator,
                n,
                m,
                beta,
                alphas,
                replicates: common.replicates,
                seed: common.seed,
            })?;
            with_output(common.out.as_deref(), out, |w| {
                write_coverage_csv(&report, w)
            })
        }
        SimulateCommand::QuantileRatio {
            common,
            n_grid,
            alpha,
        } => {
            LalQuery::new(BatchSize::Finite(1), 1.0, alpha)?;
            let report = quantile_ratio_mc(&QuantileRatioConfig {
                generator: common.generator,
                n_grid,
                alpha,
                replicates: common.replicates,
                seed: common.seed,
            })?;
            with_output(common.out.as_deref(), out, |w| {
                write_quantile_ratio_csv(&report, w)
            })
        }
        SimulateCommand::Oracle {
            n,
            m,
            i,
            j,
            beta,
            alpha,
        } => {
            if let (Some(i), Some(j)) = (i, j) {
                let exact = enumerate_interval(n, m, i, j)?;
                let formula = order_pmf(n, m, i, j)?;
                let _ = writeln!(out, "event          L^c_({j}) <= L_({i}) < L^c_({})", j + 1);
                let _ = writeln!(
                    out,
                    "enumeration    {exact} = {}",
                    format_value(exact.to_f64())
                );
                let _ = writeln!(out, "closed_form    {}", format_value(formula));
                let _ = writeln!(out, "abs_diff       {:e}", (exact.to_f64() - formula).abs());
                return Ok(());
            }
            let (Some(beta), Some(alpha)) = (beta, alpha) else {
                return Err(LalError::domain(
                    "oracle needs either --i/--j or --beta/--alpha",
                ));
            };
            LalQuery::new(BatchSize::Finite(m), beta, alpha)?;
            let v = validity_check(n, m, beta, alpha)?;
            let _ = writeln!(out, "ordinal        {}", v.ordinal);
            let _ = writeln!(out, "k_star         {}", v.k_star);
            let _ = writeln!(out, "tail_at_k_star {}", format_value(v.tail_at_k_star));
            let _ = writeln!(
                out,
                "enumeration    {} = {}",
                v.exact,
                format_value(v.exact.to_f64())
            );
            let _ = writeln!(out, "valid          {}", v.holds(alpha));
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{}", e.render());
                    return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE
                    } else {
                        EXIT_OK
                    };
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
