//! End-to-end tests of the wavetail binary: artifact production, exit-code
//! contract, determinism, and the fit on known synthetic data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavetail"))
}

/// Fresh per-test output directory under the cargo-managed tmp dir.
fn work_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Reduced schedule that still reaches the algebraic tail: the fit window
/// starts after the interference wiggle around t ~ 100 dies out.
const SMOKE_CONFIG: &str = r#"
[interval]
points = 41

[schedule]
t_dense_max = 60.0
t_max = 1200.0
dense_per_decade = 8
sparse_per_decade = 16

[comparison]
times = [2.0]
tolerance = 5e-3

[grid]
half_width = 80.0
dx = 0.02
dt = 2e-3

[fit]
window = [200.0, 1200.0]
"#;

#[test]
fn full_pipeline_smoke_run_passes_its_checks() {
    let dir = work_dir("smoke-run");
    let config = dir.join("smoke.toml");
    fs::write(&config, SMOKE_CONFIG).unwrap();
    let out_dir = dir.join("out");

    let out = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--check",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let text = stdout_of(&out);
    assert_eq!(code(&out), 0, "stdout:\n{text}");

    for name in [
        "amplitudes.csv",
        "packet.csv",
        "spectral.csv",
        "nonescape.csv",
        "asymptote.csv",
        "snapshot_t2.csv",
        "fit_report.txt",
        "plot.gp",
    ] {
        assert!(out_dir.join(name).exists(), "missing artifact {name}");
    }

    let report = fs::read_to_string(out_dir.join("fit_report.txt")).unwrap();
    assert!(report.contains("predicted tail exponent: -3"), "{report}");
    assert!(report.contains("-> pass"), "{report}");
    assert!(text.contains("units: hbar = 1, 2M = 1"));

    // Every artifact row after the comments/header is plain comma-separated
    // floats in scientific notation.
    let nonescape = fs::read_to_string(out_dir.join("nonescape.csv")).unwrap();
    let mut rows = 0;
    for line in nonescape.lines().filter(|l| !l.starts_with('#')).skip(1) {
        for cell in line.split(',') {
            cell.parse::<f64>().unwrap_or_else(|_| panic!("bad cell {cell}"));
        }
        rows += 1;
    }
    assert!(rows > 20, "expected a full schedule, got {rows} rows");

    let plot = fs::read_to_string(out_dir.join("plot.gp")).unwrap();
    assert!(plot.contains("set logscale xy"));
    assert!(plot.contains("nonescape.csv") && plot.contains("asymptote.csv"));
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let dir = work_dir("determinism");
    for pass in ["a", "b"] {
        let out_dir = dir.join(pass);
        let out = run(&["amplitudes", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        let out = run(&["tail", "--packet", "m=2", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    for name in ["amplitudes.csv", "asymptote.csv"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn config_problems_exit_1() {
    let dir = work_dir("config-errors");

    let out = run(&["validate", "--config", "/nonexistent/nowhere.toml"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read config"));

    let bad_value = dir.join("bad-value.toml");
    fs::write(&bad_value, "[potential]\nheight = -1.0\n").unwrap();
    let out = run(&["validate", "--config", bad_value.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("height"));

    let unknown_key = dir.join("unknown-key.toml");
    fs::write(&unknown_key, "[packet]\nwidth = 2.0\n").unwrap();
    let out = run(&["validate", "--config", unknown_key.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let out = run(&["validate", "--packet", "m=5"]);
    assert_eq!(code(&out), 1);

    // An empty comparison schedule leaves `evolve` with nothing to do.
    let no_times = dir.join("no-times.toml");
    fs::write(&no_times, "[comparison]\ntimes = []\n").unwrap();
    let out = run(&["evolve", "--config", no_times.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

fn write_synthetic_series(path: &Path, amplitude: f64, exponent: f64) {
    let mut text = String::from("t,nonescape,quadrature_error\n");
    for i in 0..60 {
        let t = 10.0 * (2000.0f64 / 10.0).powf(i as f64 / 59.0);
        let p = amplitude * t.powf(exponent);
        text.push_str(&format!("{t:.16e},{p:.16e},0.0\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_a_synthetic_power_law() {
    let dir = work_dir("fit-synthetic");
    let config = dir.join("fit.toml");
    fs::write(&config, "[fit]\nwindow = [10.0, 2000.0]\n").unwrap();
    write_synthetic_series(&dir.join("nonescape.csv"), 4.0, -3.0);

    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout:\n{}", stdout_of(&out));
    let report = fs::read_to_string(dir.join("fit_report.txt")).unwrap();
    let exponent: f64 = report
        .lines()
        .find_map(|l| l.trim().strip_prefix("exponent  E = "))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent + 3.0).abs() < 1e-6, "fitted {exponent}");
}

#[test]
fn check_failures_exit_2() {
    // A decay law incompatible with the m = 0 tail prediction of -3.
    let dir = work_dir("fit-mismatch");
    let config = dir.join("fit.toml");
    fs::write(&config, "[fit]\nwindow = [10.0, 2000.0]\n").unwrap();
    write_synthetic_series(&dir.join("nonescape.csv"), 1.0, -4.0);

    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--check",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stdout:\n{}", stdout_of(&out));
    assert!(stdout_of(&out).contains("FAIL"));
}

#[test]
fn validate_passes_for_barrier_and_free() {
    let out = run(&["validate"]);
    let text = stdout_of(&out);
    assert_eq!(code(&out), 0, "stdout:\n{text}");
    assert!(text.contains("validation passed"));
    assert!(text.contains("flux conservation"));

    let dir = work_dir("validate-free");
    let config = dir.join("free.toml");
    fs::write(&config, "[potential]\nheight = 0.0\n").unwrap();
    let out = run(&["validate", "--config", config.to_str().unwrap()]);
    let text = stdout_of(&out);
    assert_eq!(code(&out), 0, "stdout:\n{text}");
    assert!(text.contains("scattering-amplitude checks skipped"));
    assert!(text.contains("free propagation vs closed form"));
}
