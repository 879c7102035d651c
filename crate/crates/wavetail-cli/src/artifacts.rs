//! Artifact writers for the output directory.
//!
//! Every file opens with `#`-prefixed comment lines (the units note plus
//! file-specific metadata) followed by a CSV header row. Floats are printed
//! with 17 significant digits, the shortest form that round-trips f64, so a
//! repeated run over the same configuration produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use wavetail::numerics::linspace;
use wavetail::{
    Complex64, FitReport, PacketSpec, PotentialSpec, ProbabilitySeries, SpectralAmplitude,
    WaveField,
};

use crate::config::UNITS_NOTE;

/// 17-significant-digit float used in every CSV cell.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Snapshot-file suffix for a time value: `5` -> "5", `2.5` -> "2p5".
pub fn time_label(t: f64) -> String {
    format!("{t}").replace('.', "p").replace('-', "m")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn push_row(out: &mut String, cells: &[f64]) {
    for (i, &c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&sig17(c));
    }
    out.push('\n');
}

/// Momentum grid for the amplitudes file: symmetric, covering both the
/// barrier scale k_b and the packet's occupied momenta, with the singular
/// point k = 0 left out.
pub fn amplitude_momenta(pot: &PotentialSpec, packet: &PacketSpec) -> Vec<f64> {
    let kmax = (3.0 * pot.k_b()).max(packet.k0.abs() + 3.0 / packet.a0);
    linspace(-kmax, kmax, 1201)
        .into_iter()
        .filter(|&k| k != 0.0)
        .collect()
}

pub fn write_amplitudes(
    dir: &Path,
    pot: &PotentialSpec,
    packet: &PacketSpec,
) -> Result<PathBuf> {
    let ks = amplitude_momenta(pot, packet);
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "# scattering amplitudes of the potential (height {}, range {}, k_b = {})",
        pot.height(),
        pot.range(),
        pot.k_b()
    );
    let _ = writeln!(
        out,
        "# g_plus/g_minus: coefficients of e^(+i|k|x) / e^(-i|k|x) on the left of the barrier"
    );
    out.push_str(
        "k,g_plus_re,g_plus_im,g_minus_re,g_minus_im,transmission_re,transmission_im,unitarity_defect\n",
    );
    for &k in &ks {
        let data = pot.amplitudes(k).context("amplitude evaluation failed")?;
        push_row(
            &mut out,
            &[
                k,
                data.g_plus.re,
                data.g_plus.im,
                data.g_minus.re,
                data.g_minus.im,
                data.transmission.re,
                data.transmission.im,
                data.unitarity_defect(),
            ],
        );
    }
    write_file(dir, "amplitudes.csv", &out)
}

pub fn write_packet(dir: &Path, packet: &PacketSpec) -> Result<PathBuf> {
    let xs = linspace(
        packet.x0 - 8.0 * packet.a0,
        packet.x0 + 8.0 * packet.a0,
        801,
    );
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "# initial packet: m = {}, a0 = {}, k0 = {}, x0 = {}",
        packet.m, packet.a0, packet.k0, packet.x0
    );
    out.push_str("x,psi_re,psi_im,density\n");
    for &x in &xs {
        let psi = packet.position_amplitude(x);
        push_row(&mut out, &[x, psi.re, psi.im, psi.norm_sqr()]);
    }
    write_file(dir, "packet.csv", &out)
}

/// Momentum grid for the spectral-amplitude file (k = 0 left out: the
/// amplitude is only one-sidedly smooth there).
pub fn spectral_momenta(packet: &PacketSpec) -> Vec<f64> {
    let kmax = packet.k0.abs() + 8.0 / packet.a0;
    linspace(-kmax, kmax, 1601)
        .into_iter()
        .filter(|&k| k != 0.0)
        .collect()
}

pub fn write_spectral(dir: &Path, amp: &SpectralAmplitude) -> Result<PathBuf> {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "# spectral amplitude psi_tilde(k): expansion of the packet over scattering states"
    );
    let _ = writeln!(out, "# vanishing order at k = 0: {}", amp.vanishing_order);
    for (label, table) in [("0+", &amp.derivatives_at_zero[0]), ("0-", &amp.derivatives_at_zero[1])]
    {
        let cells: Vec<String> = table
            .iter()
            .map(|d| format!("({}, {})", sig17(d.re), sig17(d.im)))
            .collect();
        let _ = writeln!(
            out,
            "# d^n/dk^n psi_tilde({label}) for n = 0..{}: {}",
            table.len() - 1,
            cells.join(" ")
        );
    }
    out.push_str("k,psi_tilde_re,psi_tilde_im,psi_tilde_abs\n");
    for (&k, v) in amp.ks.iter().zip(&amp.values) {
        push_row(&mut out, &[k, v.re, v.im, v.norm()]);
    }
    write_file(dir, "spectral.csv", &out)
}

/// One grid-vs-spectral snapshot; both fields share the same positions.
pub fn write_snapshot(
    dir: &Path,
    t: f64,
    xs: &[f64],
    grid: &[Complex64],
    spectral: &[Complex64],
    defect: f64,
) -> Result<PathBuf> {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(out, "# wave function at t = {t}: grid propagation vs spectral synthesis");
    let _ = writeln!(out, "# relative L2 difference between the two: {}", sig17(defect));
    out.push_str("x,grid_re,grid_im,spectral_re,spectral_im\n");
    for ((&x, g), s) in xs.iter().zip(grid).zip(spectral) {
        push_row(&mut out, &[x, g.re, g.im, s.re, s.im]);
    }
    write_file(dir, &format!("snapshot_t{}.csv", time_label(t)), &out)
}

pub fn write_nonescape(
    dir: &Path,
    series: &ProbabilitySeries,
    window: (f64, f64),
) -> Result<PathBuf> {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "# nonescape probability P(t): integral of |psi|^2 over [{}, {}]",
        window.0, window.1
    );
    out.push_str("t,nonescape,quadrature_error\n");
    for ((&t, &p), &e) in series.ts.iter().zip(&series.values).zip(&series.errors) {
        push_row(&mut out, &[t, p, e]);
    }
    write_file(dir, "nonescape.csv", &out)
}

pub fn write_asymptote(dir: &Path, ts: &[f64], ps: &[f64], window: (f64, f64)) -> Result<PathBuf> {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "# algebraic late-time tail of P(t) over [{}, {}], from the (it)^(-n/2) expansion of psi",
        window.0, window.1
    );
    out.push_str("t,nonescape_tail\n");
    for (&t, &p) in ts.iter().zip(ps) {
        push_row(&mut out, &[t, p]);
    }
    write_file(dir, "asymptote.csv", &out)
}

/// Human-readable fit summary; `predicted` is the tail-expansion exponent the
/// fit is compared against under --check.
pub fn fit_report_text(
    packet: &PacketSpec,
    fit: &FitReport,
    predicted: f64,
    tolerance: f64,
    auto_window: bool,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(
        out,
        "packet: m = {}, a0 = {}, k0 = {}, x0 = {}",
        packet.m, packet.a0, packet.k0, packet.x0
    );
    let _ = writeln!(
        out,
        "fit window: [{:.6e}, {:.6e}] ({})",
        fit.window.0,
        fit.window.1,
        if auto_window { "auto-detected" } else { "from configuration" }
    );
    let _ = writeln!(out, "log-spaced bins entering the regression: {}", fit.bins);
    let _ = writeln!(out, "model: P(t) = A * t^E");
    let _ = writeln!(out, "  exponent  E = {:.6e} +/- {:.2e}", fit.exponent, fit.stderr);
    let _ = writeln!(out, "  amplitude A = {:.6e}", fit.amplitude);
    let _ = writeln!(out, "  r^2 = {:.8}", fit.r_squared);
    let _ = writeln!(out, "predicted tail exponent: {predicted}");
    let diff = (fit.exponent - predicted).abs();
    let _ = writeln!(
        out,
        "agreement: |E - predicted| = {:.3e} <= {tolerance} -> {}",
        diff,
        if diff <= tolerance { "pass" } else { "FAIL" }
    );
    out
}

pub fn write_fit_report(dir: &Path, text: &str) -> Result<PathBuf> {
    write_file(dir, "fit_report.txt", text)
}

/// Gnuplot script overlaying the measured decay, the tail formula and the
/// fitted power law on log-log axes.
pub fn write_plot_script(dir: &Path, fit: &FitReport) -> Result<PathBuf> {
    let mut out = String::new();
    let _ = writeln!(out, "# {UNITS_NOTE}");
    let _ = writeln!(out, "# render with: gnuplot -persist plot.gp");
    out.push_str("set logscale xy\n");
    out.push_str("set xlabel \"time t\"\n");
    out.push_str("set ylabel \"nonescape probability P(t)\"\n");
    out.push_str("set format y \"10^{%L}\"\n");
    out.push_str("set key left bottom\n");
    out.push_str("set datafile separator \",\"\n");
    let _ = writeln!(out, "A = {}", sig17(fit.amplitude));
    let _ = writeln!(out, "E = {}", sig17(fit.exponent));
    let _ = writeln!(out, "t_lo = {}", sig17(fit.window.0));
    let _ = writeln!(out, "t_hi = {}", sig17(fit.window.1));
    out.push_str(
        "plot \"nonescape.csv\" using 1:2 with points pt 7 ps 0.6 title \"P(t), spectral propagation\", \\\n",
    );
    out.push_str("     \"asymptote.csv\" using 1:2 with lines lw 2 title \"tail expansion\", \\\n");
    out.push_str(
        "     (x >= t_lo && x <= t_hi ? A * x**E : 1/0) with lines dashtype 2 title sprintf(\"fit: %.3g t^{%.3f}\", A, E)\n",
    );
    write_file(dir, "plot.gp", &out)
}

/// Relative L2 difference between two fields sampled on the same grid.
pub fn relative_l2_defect(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let reference: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (diff / reference).sqrt()
}

/// Restrict a propagated field to [lo, hi], thinning to at most ~2001 rows so
/// snapshot files stay reviewable; returns (positions, values).
pub fn window_samples(field: &WaveField, lo: f64, hi: f64) -> (Vec<f64>, Vec<Complex64>) {
    let idx: Vec<usize> = (0..field.xs.len())
        .filter(|&i| field.xs[i] >= lo && field.xs[i] <= hi)
        .collect();
    let stride = idx.len().div_ceil(2001).max(1);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for pos in (0..idx.len()).step_by(stride) {
        xs.push(field.xs[idx[pos]]);
        vs.push(field.values[idx[pos]]);
    }
    (xs, vs)
}
