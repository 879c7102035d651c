//! Command-line driver for the wave-packet decay study.
//!
//! `run` executes the whole pipeline (scattering amplitudes, spectral
//! amplitude of the packet, propagation over a log-spaced time schedule,
//! long-time tail overlay, grid cross-validation, power-law fit);
//! `validate` prints the invariant suite as a pass/fail table; the other
//! subcommands expose the individual stages. Exit status: 0 on success,
//! 1 on configuration or I/O errors, 2 when a quantitative check fails.

mod artifacts;
mod checks;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use wavetail::asymptotics::tail_expansion;
use wavetail::numerics::simpson_uniform;
use wavetail::observables::{auto_fit_window, fit_power_law, nonescape, three_regions};
use wavetail::propagation::{evolve_grid, evolve_spectral};
use wavetail::spectral::spectral_amplitude;
use wavetail::{
    FitReport, PacketSpec, PotentialSpec, ProbabilitySeries, SpectralParams, TailExpansion,
};

use crate::checks::CheckRow;
use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "wavetail",
    version,
    about = "Wave-packet decay from a finite-range potential: scattering amplitudes, \
             propagation, and the algebraic nonescape tail"
)]
struct Cli {
    /// TOML configuration; the built-in defaults reproduce the reference
    /// setup (barrier height 16, range 1, packet m = 0 from x0 = -20).
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,

    /// Packet-family override: m=<0|1|2>, the order of the momentum-space
    /// zero at k = 0.
    #[arg(long, global = true, value_name = "m=<0|1|2>", value_parser = parse_packet)]
    packet: Option<u32>,

    /// Gate the exit status on the quantitative comparisons (exit 2 when one
    /// fails).
    #[arg(long, global = true)]
    check: bool,

    /// Output directory (overrides [output] dir).
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: every artifact plus the fit report and plot script.
    Run,
    /// Invariant suite: unitarity, normalization, limits, cross-checks.
    Validate,
    /// Scattering amplitudes across the momentum grid.
    Amplitudes,
    /// Grid-vs-spectral snapshots at the configured comparison times.
    Evolve,
    /// Long-time expansion of psi and the P(t) asymptote data.
    Tail,
    /// Power-law fit of an existing nonescape.csv.
    Fit,
}

fn parse_packet(s: &str) -> std::result::Result<u32, String> {
    let digits = s.strip_prefix("m=").unwrap_or(s);
    match digits.parse::<u32>() {
        Ok(m) if m <= 2 => Ok(m),
        _ => Err(format!("expected m=<0|1|2>, got '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage problems are configuration errors (1); --help/--version
            // print to stdout and succeed.
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(m) = cli.packet {
        cfg.packet.m = m;
    }
    let pot = cfg.potential_spec()?;
    let packet = cfg.packet_spec()?;
    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match cli.command {
        Command::Run => cmd_run(&cfg, &pot, &packet, &out_dir, cli.check),
        Command::Validate => cmd_validate(&cfg, &pot, &packet),
        Command::Amplitudes => cmd_amplitudes(&pot, &packet, &out_dir, cli.check),
        Command::Evolve => cmd_evolve(&cfg, &pot, &packet, &out_dir, cli.check),
        Command::Tail => cmd_tail(&cfg, &pot, &packet, &out_dir, cli.check),
        Command::Fit => cmd_fit(&cfg, &pot, &packet, &out_dir, cli.check),
    }
}

fn banner(cfg: &ExperimentConfig, pot: &PotentialSpec, packet: &PacketSpec) {
    println!("{}", config::UNITS_NOTE);
    if pot.is_free() {
        println!("potential: free");
    } else {
        println!(
            "potential: height {}, range {}, k_b = {}",
            pot.height(),
            pot.range(),
            pot.k_b()
        );
    }
    println!(
        "packet: m = {}, a0 = {}, k0 = {}, x0 = {}",
        packet.m, packet.a0, packet.k0, packet.x0
    );
    println!(
        "observation window: [{}, {}], {} quadrature points",
        cfg.interval.left, cfg.interval.right, cfg.interval.points
    );
}

fn cmd_run(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
    check: bool,
) -> Result<bool> {
    banner(cfg, pot, packet);
    let window = (cfg.interval.left, cfg.interval.right);
    println!(
        "initial probability outside the window: {:.3e}",
        packet.support_violation(window.0, window.1)?
    );

    artifacts::write_packet(out_dir, packet)?;
    artifacts::write_amplitudes(out_dir, pot, packet)?;
    let amp = spectral_amplitude(pot, packet, &artifacts::spectral_momenta(packet))?;
    artifacts::write_spectral(out_dir, &amp)?;
    println!(
        "spectral amplitude vanishes to order {} at k = 0",
        amp.vanishing_order
    );

    let ts = cfg.schedule_times();
    let xs = cfg.interval_grid();
    println!(
        "propagating through {} times up to t = {}",
        ts.len(),
        cfg.schedule.t_max
    );
    let series = nonescape_series(pot, packet, &ts, &xs, window)?;
    artifacts::write_nonescape(out_dir, &series, window)?;

    match three_regions(&series.ts, &series.values) {
        Ok(r) => println!(
            "decay / rebound / decay: minimum P = {:.4e} at t = {:.4}, rebound peak P = {:.4e} at t = {:.4}",
            r.p_min, r.t_min, r.p_peak, r.t_peak
        ),
        Err(_) => println!("no rebound detected (monotone decay)"),
    }

    let (tail_ts, tail_ps) = tail_overlay(cfg, pot, packet)?;
    artifacts::write_asymptote(out_dir, &tail_ts, &tail_ps, window)?;
    let predicted = predicted_exponent(pot, packet, &xs)?;
    println!("tail expansion predicts P(t) ~ t^{predicted}");

    let mut worst_defect = None;
    if !cfg.comparison.times.is_empty() {
        let defects = comparison_snapshots(cfg, pot, packet, out_dir)?;
        worst_defect = defects.into_iter().reduce(f64::max);
    }

    let (fit, auto) = fit_series(cfg, &series.ts, &series.values)?;
    let report = artifacts::fit_report_text(packet, &fit, predicted, cfg.fit.exponent_tolerance, auto);
    artifacts::write_fit_report(out_dir, &report)?;
    artifacts::write_plot_script(out_dir, &fit)?;
    print!("{report}");
    println!("artifacts written to {}", out_dir.display());

    if !check {
        return Ok(true);
    }
    let mut rows = Vec::new();
    if let Some(defect) = worst_defect {
        rows.push(CheckRow::new(
            "grid vs spectral propagation: worst relative L2 defect",
            defect,
            cfg.comparison.tolerance,
        ));
    }
    rows.push(CheckRow::new(
        "fitted exponent vs tail prediction: |difference|",
        (fit.exponent - predicted).abs(),
        cfg.fit.exponent_tolerance,
    ));
    Ok(checks::print_table(&rows))
}

fn cmd_validate(cfg: &ExperimentConfig, pot: &PotentialSpec, packet: &PacketSpec) -> Result<bool> {
    banner(cfg, pot, packet);
    let rows = checks::validation_rows(pot, packet)?;
    let all = checks::print_table(&rows);
    println!("{}", if all { "validation passed" } else { "validation FAILED" });
    Ok(all)
}

fn cmd_amplitudes(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
    check: bool,
) -> Result<bool> {
    let path = artifacts::write_amplitudes(out_dir, pot, packet)?;
    let mut worst: f64 = 0.0;
    for k in artifacts::amplitude_momenta(pot, packet) {
        worst = worst.max(pot.amplitudes(k)?.unitarity_defect());
    }
    println!("wrote {}", path.display());
    println!("worst unitarity defect on the grid: {worst:.3e}");
    if check {
        let rows = [CheckRow::new(
            "flux conservation across the amplitude grid",
            worst,
            1e-12,
        )];
        return Ok(checks::print_table(&rows));
    }
    Ok(true)
}

fn cmd_evolve(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
    check: bool,
) -> Result<bool> {
    if cfg.comparison.times.is_empty() {
        bail!("comparison.times is empty; nothing to evolve");
    }
    banner(cfg, pot, packet);
    let defects = comparison_snapshots(cfg, pot, packet, out_dir)?;
    let worst = defects.into_iter().fold(0.0, f64::max);
    if check {
        let rows = [CheckRow::new(
            "grid vs spectral propagation: worst relative L2 defect",
            worst,
            cfg.comparison.tolerance,
        )];
        return Ok(checks::print_table(&rows));
    }
    Ok(true)
}

fn cmd_tail(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
    check: bool,
) -> Result<bool> {
    let xs = cfg.interval_grid();
    let mid = xs[xs.len() / 2];
    let tail = tail_expansion(pot, packet, mid)?;
    println!("late-time expansion at x = {mid}: psi(t) ~ sum of c * (it)^-p");
    println!("{:>7}  {:>24}  {:>24}", "power", "Re c", "Im c");
    for term in &tail.terms {
        println!(
            "{:>7}  {:>24.16e}  {:>24.16e}",
            term.power, term.coefficient.re, term.coefficient.im
        );
    }
    println!(
        "leading power {} -> nonescape probability decays as t^{}",
        tail.leading_power(),
        tail.nonescape_exponent()
    );

    let window = (cfg.interval.left, cfg.interval.right);
    let (ts, ps) = tail_overlay(cfg, pot, packet)?;
    let path = artifacts::write_asymptote(out_dir, &ts, &ps, window)?;
    println!("wrote {}", path.display());

    if check {
        // The expansion must meet the full propagation once t is deep in the
        // algebraic regime; compare at the last scheduled time.
        let t = *ts.last().expect("schedule reaches t_max");
        let field = evolve_spectral(pot, packet, t, &xs, &SpectralParams::default())?;
        let (p, _) = nonescape(&field, window.0, window.1)?;
        let rel = (p - ps[ps.len() - 1]).abs() / p.abs().max(f64::MIN_POSITIVE);
        let rows = [CheckRow::new(
            format!("tail formula vs spectral propagation at t = {t}"),
            rel,
            0.05,
        )];
        return Ok(checks::print_table(&rows));
    }
    Ok(true)
}

fn cmd_fit(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
    check: bool,
) -> Result<bool> {
    let path = out_dir.join("nonescape.csv");
    let (ts, ps) = read_nonescape(&path)?;
    let (fit, auto) = fit_series(cfg, &ts, &ps)?;
    let predicted = predicted_exponent(pot, packet, &cfg.interval_grid())?;
    let report = artifacts::fit_report_text(packet, &fit, predicted, cfg.fit.exponent_tolerance, auto);
    artifacts::write_fit_report(out_dir, &report)?;
    artifacts::write_plot_script(out_dir, &fit)?;
    print!("{report}");
    if check {
        let rows = [CheckRow::new(
            "fitted exponent vs tail prediction: |difference|",
            (fit.exponent - predicted).abs(),
            cfg.fit.exponent_tolerance,
        )];
        return Ok(checks::print_table(&rows));
    }
    Ok(true)
}

/// P(t) over the schedule by spectral propagation restricted to the window.
fn nonescape_series(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    ts: &[f64],
    xs: &[f64],
    window: (f64, f64),
) -> Result<ProbabilitySeries> {
    let params = SpectralParams::default();
    let mut series = ProbabilitySeries::default();
    for &t in ts {
        let field = evolve_spectral(pot, packet, t, xs, &params)?;
        let (p, err) = nonescape(&field, window.0, window.1)?;
        series.push(t, p, err);
    }
    Ok(series)
}

/// P(t) from the late-time expansion: |psi_tail|^2 integrated over the
/// window, at the scheduled times inside the algebraic regime.
fn tail_overlay(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs = cfg.interval_grid();
    let dx = (cfg.interval.right - cfg.interval.left) / (cfg.interval.points - 1) as f64;
    let tails: Vec<TailExpansion> = xs
        .iter()
        .map(|&x| tail_expansion(pot, packet, x))
        .collect::<wavetail::Result<_>>()?;
    let ts: Vec<f64> = cfg
        .schedule_times()
        .into_iter()
        .filter(|&t| t >= cfg.schedule.t_dense_max)
        .collect();
    let ps = ts
        .iter()
        .map(|&t| {
            let dens: Vec<f64> = tails.iter().map(|tl| tl.value(t).norm_sqr()).collect();
            simpson_uniform(&dens, dx)
        })
        .collect();
    Ok((ts, ps))
}

/// Decay exponent of P(t) predicted by the expansion. The window integral is
/// dominated by its slowest-decaying point, so take the largest exponent
/// over three probes.
fn predicted_exponent(pot: &PotentialSpec, packet: &PacketSpec, xs: &[f64]) -> Result<f64> {
    let probes = [xs[0], xs[xs.len() / 2], xs[xs.len() - 1]];
    let mut predicted = f64::NEG_INFINITY;
    for &x in &probes {
        predicted = predicted.max(tail_expansion(pot, packet, x)?.nonescape_exponent());
    }
    Ok(predicted)
}

/// Crank-Nicolson propagation at the comparison times, each snapshot checked
/// against the spectral synthesis on the same positions; returns the
/// relative L2 defects.
fn comparison_snapshots(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    packet: &PacketSpec,
    out_dir: &Path,
) -> Result<Vec<f64>> {
    let gp = cfg.grid_params();
    println!(
        "grid propagation: box [-{0}, {0}], dx = {1:.4e}, dt = {2:.4e}",
        gp.half_width, gp.dx, gp.dt
    );
    let fields = evolve_grid(pot, packet, &cfg.comparison.times, &gp)?;
    let params = SpectralParams::default();
    let mut defects = Vec::new();
    for field in &fields {
        let (xs, grid_vals) =
            artifacts::window_samples(field, cfg.comparison.x_left, cfg.comparison.x_right);
        if xs.len() < 3 {
            bail!(
                "comparison window [{}, {}] covers too little of the grid box",
                cfg.comparison.x_left,
                cfg.comparison.x_right
            );
        }
        let spectral = evolve_spectral(pot, packet, field.t, &xs, &params)?;
        let defect = artifacts::relative_l2_defect(&grid_vals, &spectral.values);
        artifacts::write_snapshot(out_dir, field.t, &xs, &grid_vals, &spectral.values, defect)?;
        println!(
            "t = {}: grid vs spectral relative L2 defect {:.3e} (grid norm drift {:.1e})",
            field.t, defect, field.error_budget
        );
        defects.push(defect);
    }
    Ok(defects)
}

fn fit_series(cfg: &ExperimentConfig, ts: &[f64], ps: &[f64]) -> Result<(FitReport, bool)> {
    let (window, auto) = match cfg.fit.window {
        Some([lo, hi]) => ((lo, hi), false),
        None => (auto_fit_window(ts, ps)?, true),
    };
    let fit = fit_power_law(ts, ps, window).context("power-law fit failed")?;
    Ok((fit, auto))
}

fn read_nonescape(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| {
        format!(
            "cannot read {} (run `wavetail run` first to produce it)",
            path.display()
        )
    })?;
    let mut ts = Vec::new();
    let mut ps = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cells = line.split(',');
        let (Some(a), Some(b)) = (cells.next(), cells.next()) else {
            bail!("malformed row in {}: {line}", path.display());
        };
        let Ok(t) = a.trim().parse::<f64>() else {
            continue; // header row
        };
        let p: f64 = b
            .trim()
            .parse()
            .with_context(|| format!("malformed row in {}: {line}", path.display()))?;
        ts.push(t);
        ps.push(p);
    }
    if ts.len() < 5 {
        bail!("{} holds too few samples to fit", path.display());
    }
    Ok((ts, ps))
}
