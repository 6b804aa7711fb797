use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/data")
        .join(file)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn limit_reports_outcome() {
    let out = lal(&[
        "limit",
        "--input",
        &data("model_a.csv"),
        "--alpha",
        "0.1",
        "--m",
        "5",
        "--beta",
        "0.6",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for key in [
        "k_star",
        "limit",
        "exact_coverage",
        "ordinal        3",
        "no finite-sample guarantee",
    ] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
}

#[test]
fn limit_notes_ties() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "ties.csv", "loss\n1\n1\n2\n3\n");
    let out = lal(&["limit", "--input", path.to_str().unwrap(), "--alpha", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("conservative under ties"));
}

#[test]
fn infinite_batch_and_json_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "l.json", "[0.5, 1.5, 0.25, 2.0, 1.0]");
    let out = lal(&[
        "limit",
        "--input",
        path.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--m",
        "inf",
        "--beta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("m              inf"));
}

#[test]
fn usage_errors_exit_one() {
    let input = data("model_a.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["limit", "--input", &input],
        vec!["limit", "--input", &input, "--alpha", "1.5"],
        vec!["limit", "--input", &input, "--alpha", "0.1", "--beta", "0"],
        vec!["limit", "--input", &input, "--alpha", "0.1", "--m", "zero"],
        vec!["curve", "--input", &input, "--alpha-grid", "0.5:0.1:0.1"],
        vec!["compare", "--input", "onlyone"],
        vec![
            "simulate", "oracle", "--n", "20", "--m", "10", "--i", "1", "--j", "2",
        ],
        vec!["simulate", "coverage", "--generator", "cauchy", "--n", "10"],
    ];
    for args in cases {
        let out = lal(&args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "args {args:?}: {}",
            stderr(&out)
        );
    }
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "loss\n1.0\nabc\n");
    let nan = write(dir.path(), "nan.csv", "loss\n1.0\nNaN\n");
    let out = lal(&["limit", "--input", bad.to_str().unwrap(), "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    let out = lal(&["limit", "--input", nan.to_str().unwrap(), "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = lal(&["limit", "--input", "/no/such/file.csv", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = lal(&[
        "limit",
        "--input",
        &data("model_a.csv"),
        "--alpha",
        "0.1",
        "--support-max",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = lal(&[
        "limit",
        "--input",
        &data("regression.csv"),
        "--alpha",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(lal(&["--help"]).status.code(), Some(0));
    assert_eq!(lal(&["--version"]).status.code(), Some(0));
    assert_eq!(lal(&["simulate", "--help"]).status.code(), Some(0));
}

#[test]
fn curve_csv_to_stdout_and_svg_to_file() {
    let out = lal(&[
        "curve",
        "--input",
        &data("model_a.csv"),
        "--m",
        "10",
        "--beta",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("alpha,limit,k,exact_coverage\n"));
    assert_eq!(text.lines().count(), 52);

    let out = lal(&[
        "curve",
        "--input",
        &data("model_a.csv"),
        "--alpha-grid",
        "0.05:0.5:0.05",
    ]);
    assert_eq!(stdout(&out).lines().count(), 11);

    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("c.svg");
    let out = lal(&[
        "curve",
        "--input",
        &data("model_a.csv"),
        "--format",
        "svg",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(std::fs::read_to_string(svg).unwrap().contains("</svg>"));
}

#[test]
fn compare_two_models() {
    let a = format!("a={}", data("model_a.csv"));
    let b = format!("b={}", data("model_b.csv"));
    let out = lal(&[
        "compare",
        "--input",
        &a,
        "--input",
        &b,
        "--alpha-grid",
        "0.1:0.3:0.1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("sample,alpha,limit,k,exact_coverage,mean_loss\n"));
    assert_eq!(text.lines().count(), 7);
    assert!(stderr(&out).contains("no finite-sample guarantee"));
}

#[test]
fn losses_then_limit() {
    let dir = tempfile::tempdir().unwrap();
    let losses = dir.path().join("losses.csv");
    let out = lal(&[
        "losses",
        "--input",
        &data("regression.csv"),
        "--loss",
        "absolute",
        "--out",
        losses.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let direct = lal(&[
        "limit",
        "--input",
        &data("regression.csv"),
        "--loss",
        "absolute",
        "--alpha",
        "0.1",
    ]);
    let via_file = lal(&[
        "limit",
        "--input",
        losses.to_str().unwrap(),
        "--alpha",
        "0.1",
    ]);
    assert_eq!(stdout(&direct), stdout(&via_file));

    let out = lal(&[
        "losses",
        "--input",
        &data("density.csv"),
        "--loss",
        "gaussian-nll",
        "--mean",
        "0,0",
        "--cov",
        "1,0.5;0.5,0.89",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 41);

    let out = lal(&[
        "losses",
        "--input",
        &data("density.csv"),
        "--loss",
        "gaussian-nll",
        "--mean",
        "0,0",
        "--cov",
        "1,2;2,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn saturated_nll_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", "label,p_0,p_1\n0,0.9,0.1\n1,1.0,0.0\n");
    let out = lal(&[
        "losses",
        "--input",
        path.to_str().unwrap(),
        "--loss",
        "categorical-nll",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("lines 3"), "{}", stderr(&out));
}

#[test]
fn simulations_are_reproducible() {
    let args = [
        "simulate",
        "coverage",
        "--generator",
        "exponential",
        "--n",
        "20",
        "--m",
        "5",
        "--beta",
        "0.6",
        "--alpha-grid",
        "0.1:0.3:0.1",
        "--replicates",
        "200",
        "--seed",
        "9",
    ];
    let first = lal(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&lal(&args)));
    assert_eq!(stdout(&first).lines().count(), 4);

    let out = lal(&[
        "simulate",
        "quantile-ratio",
        "--generator",
        "exponential",
        "--n-grid",
        "20,80",
        "--replicates",
        "50",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn oracle_subcommand() {
    let out = lal(&[
        "simulate", "oracle", "--n", "5", "--m", "4", "--beta", "0.5", "--alpha", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("valid          true"));
    let out = lal(&[
        "simulate", "oracle", "--n", "4", "--m", "2", "--i", "1", "--j", "2",
    ]);
    assert!(stdout(&out).contains("3/15"));
}
