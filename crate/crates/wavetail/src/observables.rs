//! From wave fields to the quantities actually plotted: the nonescape
//! probability P(t) = integral of |psi|^2 over the observation window, power
//! law fits of its late-time decay, and the qualitative three-region shape
//! (initial escape, rebound through the window, algebraic tail).

use crate::numerics::simpson_with_error;
use crate::propagation::WaveField;
use crate::{Error, Result};

/// P(t) samples with their quadrature error estimates.
#[derive(Clone, Debug, Default)]
pub struct ProbabilitySeries {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ProbabilitySeries {
    pub fn push(&mut self, t: f64, value: f64, error: f64) {
        self.ts.push(t);
        self.values.push(value);
        self.errors.push(error);
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

/// Probability in the window [a, b]: Simpson on |psi|^2 over the matching
/// grid subrange, plus an error estimate from the half-resolution rule. The
/// endpoints must land on grid points of a uniformly spaced stretch.
pub fn nonescape(field: &WaveField, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!("bad window [{a}, {b}]")));
    }
    let xs = &field.xs;
    let tol = 1e-9 * a.abs().max(b.abs()).max(1.0);
    let ia = xs.partition_point(|&x| x < a - tol);
    let ib = xs.partition_point(|&x| x < b - tol);
    if ia >= xs.len() || (xs[ia] - a).abs() > tol {
        return Err(Error::GridCoverage(format!(
            "window endpoint {a} is not a grid point"
        )));
    }
    if ib >= xs.len() || (xs[ib] - b).abs() > tol {
        return Err(Error::GridCoverage(format!(
            "window endpoint {b} is not a grid point"
        )));
    }
    if ib - ia < 2 {
        return Err(Error::GridCoverage(format!(
            "window [{a}, {b}] covers fewer than three grid points"
        )));
    }
    let dx = xs[ia + 1] - xs[ia];
    if xs[ia..ib].windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > tol) {
        return Err(Error::GridCoverage(format!(
            "grid is not uniform across [{a}, {b}]"
        )));
    }
    let dens: Vec<f64> = field.values[ia..=ib].iter().map(|v| v.norm_sqr()).collect();
    let (p, err) = simpson_with_error(&dens, dx);
    Ok((p, if err.is_nan() { 0.0 } else { err }))
}

/// A power-law fit P ~ amplitude * t^exponent over a time window.
#[derive(Clone, Copy, Debug)]
pub struct FitReport {
    pub exponent: f64,
    /// Standard error of the exponent from the OLS residuals.
    pub stderr: f64,
    pub r_squared: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// Number of log-spaced bins entering the regression.
    pub bins: usize,
}

const BINS_PER_DECADE: f64 = 4.0;

/// Geometric-mean reduction of (t, p) samples into log-spaced t bins.
/// Nonpositive entries are skipped.
fn log_bins(ts: &[f64], ps: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let mut sums: std::collections::BTreeMap<i64, (f64, f64, usize)> = Default::default();
    let mut raw = 0usize;
    for (&t, &p) in ts.iter().zip(ps) {
        if !(t >= lo && t <= hi) || !(t > 0.0) || !(p > 0.0) || !p.is_finite() {
            continue;
        }
        raw += 1;
        let key = (t.log10() * BINS_PER_DECADE).floor() as i64;
        let e = sums.entry(key).or_default();
        e.0 += t.ln();
        e.1 += p.ln();
        e.2 += 1;
    }
    let mut bt = Vec::with_capacity(sums.len());
    let mut bp = Vec::with_capacity(sums.len());
    for (_, (st, sp, n)) in sums {
        bt.push((st / n as f64).exp());
        bp.push((sp / n as f64).exp());
    }
    (bt, bp, raw)
}

/// Fit ln P against ln t by least squares over log-spaced bins inside
/// [window.0, window.1].
pub fn fit_power_law(ts: &[f64], ps: &[f64], window: (f64, f64)) -> Result<FitReport> {
    if ts.len() != ps.len() {
        return Err(Error::InvalidInput("mismatched series lengths".into()));
    }
    let (bt, bp, raw) = log_bins(ts, ps, window.0, window.1);
    if raw < 10 || bt.len() < 4 {
        return Err(Error::FitWindow(format!(
            "window [{}, {}] holds {raw} usable samples in {} bins; need >= 10 in >= 4",
            window.0,
            window.1,
            bt.len()
        )));
    }
    let n = bt.len() as f64;
    let xs: Vec<f64> = bt.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = bp.iter().map(|p| p.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (n - 2.0).max(1.0);
    Ok(FitReport {
        exponent: slope,
        stderr: (ss_res / dof / sxx).sqrt(),
        r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
        amplitude: intercept.exp(),
        window,
        bins: bt.len(),
    })
}

/// Find the late-time window where the binned local slope of ln P vs ln t
/// has stabilized: scan backwards from the latest bin, extending while each
/// slope stays within 0.1 of the running mean of those accepted. Errors if
/// the stable stretch spans less than ~3/4 of a decade.
pub fn auto_fit_window(ts: &[f64], ps: &[f64]) -> Result<(f64, f64)> {
    let hi = ts.iter().cloned().fold(f64::NAN, f64::max);
    let (bt, bp, _) = log_bins(ts, ps, 0.0, f64::INFINITY);
    if bt.len() < 4 {
        return Err(Error::FitWindow(format!(
            "only {} bins available for slope scanning",
            bt.len()
        )));
    }
    let slopes: Vec<f64> = bt
        .windows(2)
        .zip(bp.windows(2))
        .map(|(t, p)| (p[1].ln() - p[0].ln()) / (t[1].ln() - t[0].ln()))
        .collect();
    let mut mean = *slopes.last().unwrap();
    let mut accepted = 1usize;
    let mut start_bin = slopes.len() - 1; // left bin index of earliest accepted pair
    for i in (0..slopes.len() - 1).rev() {
        if (slopes[i] - mean).abs() > 0.1 {
            break;
        }
        accepted += 1;
        mean += (slopes[i] - mean) / accepted as f64;
        start_bin = i;
    }
    let lo = bt[start_bin];
    if hi / lo < 10f64.powf(0.75) {
        return Err(Error::FitWindow(format!(
            "stable-slope stretch [{lo:.1}, {hi:.1}] spans less than 3/4 of a decade"
        )));
    }
    Ok((lo, hi))
}

/// The qualitative shape of P(t): initial decay, a rebound while the
/// reflected packet re-crosses the window, then the final algebraic tail.
#[derive(Clone, Copy, Debug)]
pub struct ThreeRegionReport {
    pub t_min: f64,
    pub p_min: f64,
    pub t_peak: f64,
    pub p_peak: f64,
}

/// Detect the decay / rebound / decay structure, with a 1e-3 relative
/// threshold so quadrature jitter cannot fake a region boundary.
pub fn three_regions(ts: &[f64], ps: &[f64]) -> Result<ThreeRegionReport> {
    const TOL: f64 = 1e-3;
    if ts.len() != ps.len() || ts.len() < 5 {
        return Err(Error::InvalidInput("series too short".into()));
    }
    // End of region one: the first genuine rise.
    let Some(rise) = ps.windows(2).position(|w| w[1] > w[0] * (1.0 + TOL)) else {
        return Err(Error::FitWindow("P(t) never rebounds".into()));
    };
    let i_min = rise;
    if i_min == 0 || ps[0] < ps[i_min] * (1.0 + TOL) {
        return Err(Error::FitWindow("no initial decay before the rebound".into()));
    }
    // The rebound peak: the largest value after the minimum (the algebraic
    // tail beyond it stays below).
    let (i_peak, &p_peak) = ps[i_min..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, p)| (i + i_min, p))
        .unwrap();
    if p_peak < ps[i_min] * (1.0 + TOL) {
        return Err(Error::FitWindow("rebound does not rise above the minimum".into()));
    }
    if i_peak + 1 >= ps.len() || ps[ps.len() - 1] > p_peak * (1.0 - TOL) {
        return Err(Error::FitWindow("no decay after the rebound".into()));
    }
    Ok(ThreeRegionReport {
        t_min: ts[i_min],
        p_min: ps[i_min],
        t_peak: ts[i_peak],
        p_peak,
    })
}

/// Last time the ratio series leaves [lo, hi]: beyond the returned time the
/// asymptotic form tracks the exact evolution to within the band. Returns
/// the first sample time if the ratio never leaves the band; errors if it is
/// still outside at the end of the series.
pub fn crossover_time(ts: &[f64], ratios: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if ts.len() != ratios.len() || ts.is_empty() {
        return Err(Error::InvalidInput("mismatched or empty ratio series".into()));
    }
    let outside = |r: f64| !(lo..=hi).contains(&r) || !r.is_finite();
    match ratios.iter().rposition(|&r| outside(r)) {
        None => Ok(ts[0]),
        Some(i) if i + 1 == ts.len() => Err(Error::FitWindow(format!(
            "ratio is still outside [{lo}, {hi}] at t = {}",
            ts[i]
        ))),
        Some(i) => Ok(ts[i]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{linspace, log_spaced};
    use crate::propagation::PropagationMethod;
    use num_complex::Complex64;

    fn field_from(xs: Vec<f64>, f: impl Fn(f64) -> Complex64) -> WaveField {
        let values = xs.iter().map(|&x| f(x)).collect();
        WaveField {
            xs,
            t: 0.0,
            values,
            method: PropagationMethod::Spectral,
            error_budget: 0.0,
        }
    }

    #[test]
    fn window_probability_of_a_polynomial_field() {
        // |psi|^2 = x^2 + x^4 integrates to 8/15 on [0, 1].
        let field = field_from(linspace(-1.0, 2.0, 601), |x| Complex64::new(x, x * x));
        let (p, err) = nonescape(&field, 0.0, 1.0).unwrap();
        assert!((p - 8.0 / 15.0).abs() < 1e-9, "got {p}");
        assert!(err < 1e-8);
    }

    #[test]
    fn window_must_match_the_grid() {
        let field = field_from(linspace(0.0, 1.0, 11), |_| Complex64::new(1.0, 0.0));
        assert!(matches!(
            nonescape(&field, 0.05, 0.8),
            Err(Error::GridCoverage(_))
        ));
        assert!(matches!(
            nonescape(&field, -0.5, 0.5),
            Err(Error::GridCoverage(_))
        ));
        assert!(matches!(
            nonescape(&field, 0.3, 0.3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let ts = log_spaced(10.0, 1e4, 40);
        let ps: Vec<f64> = ts.iter().map(|t| 7.0 * t.powf(-3.0)).collect();
        let fit = fit_power_law(&ts, &ps, (10.0, 1e4)).unwrap();
        assert!((fit.exponent + 3.0).abs() < 1e-12, "{}", fit.exponent);
        assert!((fit.amplitude - 7.0).abs() < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn noisy_power_law_reports_uncertainty() {
        let ts = log_spaced(10.0, 1e4, 60);
        let ps: Vec<f64> = ts
            .iter()
            .map(|t| 5.0 * t.powf(-2.5) * (1.0 + 2e-3 * (7.0 * t.ln()).sin()))
            .collect();
        let fit = fit_power_law(&ts, &ps, (10.0, 1e4)).unwrap();
        assert!((fit.exponent + 2.5).abs() < 0.01);
        assert!(fit.stderr > 0.0 && fit.stderr < 0.01);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn sparse_windows_are_rejected() {
        let ts = log_spaced(10.0, 1e4, 40);
        let ps: Vec<f64> = ts.iter().map(|t| t.powf(-3.0)).collect();
        assert!(matches!(
            fit_power_law(&ts, &ps, (9000.0, 1e4)),
            Err(Error::FitWindow(_))
        ));
    }

    #[test]
    fn auto_window_skips_the_transient() {
        // Slope drifts from -4 toward -3 as the 60/t correction dies off;
        // the detected window must exclude the strongly curved region and
        // keep at least the last decade.
        let ts = log_spaced(1.0, 1e4, 120);
        let ps: Vec<f64> = ts.iter().map(|t| t.powf(-3.0) * (1.0 + 60.0 / t)).collect();
        let (lo, hi) = auto_fit_window(&ts, &ps).unwrap();
        assert!((hi / 1e4 - 1.0).abs() < 1e-12);
        assert!(lo > 20.0, "window starts too early: {lo}");
        assert!(hi / lo >= 10.0, "window too narrow: [{lo}, {hi}]");
        let fit = fit_power_law(&ts, &ps, (lo, hi)).unwrap();
        assert!((fit.exponent + 3.0).abs() < 0.1, "{}", fit.exponent);
    }

    #[test]
    fn three_regions_of_a_rebounding_series() {
        let ts = linspace(1.0, 100.0, 397);
        let ps: Vec<f64> = ts
            .iter()
            .map(|&t| (-0.5 * t).exp() + 0.02 * (-0.1 * (t - 14.0) * (t - 14.0)).exp() + t.powf(-3.0))
            .collect();
        let report = three_regions(&ts, &ps).unwrap();
        assert!(report.t_min > 5.0 && report.t_min < 14.0, "t_min = {}", report.t_min);
        assert!(report.t_peak > report.t_min && report.t_peak < 18.0);
        assert!(report.p_peak > report.p_min);
    }

    #[test]
    fn monotone_series_has_no_rebound() {
        let ts = linspace(1.0, 50.0, 100);
        let ps: Vec<f64> = ts.iter().map(|t| t.powf(-2.0)).collect();
        assert!(matches!(three_regions(&ts, &ps), Err(Error::FitWindow(_))));
    }

    #[test]
    fn crossover_finds_the_last_band_exit() {
        let ts: Vec<f64> = (0..9).map(|i| 10.0 * (i + 1) as f64).collect();
        let ratios = [2.0, 1.5, 1.25, 0.9, 1.31, 1.1, 1.05, 1.02, 0.99];
        let tc = crossover_time(&ts, &ratios, 0.7, 1.3).unwrap();
        assert_eq!(tc, 50.0);
        let settled = [1.1, 1.05, 1.0];
        assert_eq!(crossover_time(&ts[..3], &settled, 0.7, 1.3).unwrap(), 10.0);
        let unsettled = [2.0, 1.8, 1.6];
        assert!(matches!(
            crossover_time(&ts[..3], &unsettled, 0.7, 1.3),
            Err(Error::FitWindow(_))
        ));
    }
}
