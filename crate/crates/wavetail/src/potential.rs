//! Finite-range 1D potentials and their stationary scattering solutions.
//!
//! A potential here vanishes identically outside [-R, R]. Scattering states
//! carry outgoing-wave boundary conditions: the wave incident from the left
//! (k > 0) has exterior form
//!
//! ```text
//! x < -R:  [e^{ikx} + g_minus(k) e^{-ikx}] / sqrt(2 pi)
//! x > +R:  transmission(k) e^{ikx}        / sqrt(2 pi)
//! ```
//!
//! and the k < 0 state mirrors it (incidence from the right). The stored
//! `g_minus` is always the coefficient of the left-exterior outgoing wave
//! e^{-i|k|x} and `transmission` the coefficient of the right-exterior
//! outgoing wave e^{+i|k|x}; for k > 0 these are the usual reflection and
//! transmission amplitudes, for k < 0 the roles swap. Flux unitarity
//! |g_minus|^2 + |transmission|^2 = 1 holds in both cases.

use num_complex::Complex64;

use crate::numerics::{binomial, one_sided_derivative, Taylor};
use crate::{Error, Result};

pub(crate) fn sqrt_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).sqrt()
}

/// Which side of k = 0 a one-sided limit is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Pos,
    Neg,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Pos => 1.0,
            Side::Neg => -1.0,
        }
    }

    pub const BOTH: [Side; 2] = [Side::Pos, Side::Neg];
}

/// One constant-value piece of a piecewise potential.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
enum Shape {
    SquareBarrier { height: f64 },
    Piecewise { segments: Vec<Segment> },
}

/// A finite-range potential: V(x) = 0 exactly for |x| > range.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    range: f64,
    shape: Shape,
}

/// Scattering amplitudes at a fixed momentum; see the module docs for the
/// exterior-wave conventions.
#[derive(Clone, Copy, Debug)]
pub struct ScatteringData {
    pub k: f64,
    /// (k_b^2 - k^2)^{1/2} with Re rho >= 0.
    pub rho: Complex64,
    /// Coefficient of e^{+i|k|x} on the left: 1 for k > 0, 0 for k < 0.
    pub g_plus: Complex64,
    /// Coefficient of e^{-i|k|x} on the left (outgoing for k > 0).
    pub g_minus: Complex64,
    /// Coefficient of e^{+i|k|x} on the right (outgoing for k > 0).
    pub transmission: Complex64,
}

impl ScatteringData {
    /// | |transmission|^2 + |g_minus|^2 - 1 |, zero for exact flux unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.transmission.norm_sqr() + self.g_minus.norm_sqr() - 1.0).abs()
    }

    /// Coefficient of e^{-i|k|x} on the right: the incident wave for k < 0.
    pub fn right_incoming(&self) -> Complex64 {
        if self.k < 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

// cos(sqrt(z)) continued through z < 0 (where it is cosh(sqrt(-z))).
pub(crate) fn cos_sqrt(z: f64) -> f64 {
    if z.abs() < 4e-8 {
        1.0 + z * (-0.5 + z * (1.0 / 24.0 - z / 720.0))
    } else if z > 0.0 {
        z.sqrt().cos()
    } else {
        (-z).sqrt().cosh()
    }
}

// sin(sqrt(z))/sqrt(z) continued through z < 0 (where it is sinh(sqrt(-z))/sqrt(-z)).
pub(crate) fn sinc_sqrt(z: f64) -> f64 {
    if z.abs() < 4e-8 {
        1.0 + z * (-1.0 / 6.0 + z * (1.0 / 120.0 - z / 5040.0))
    } else if z > 0.0 {
        let q = z.sqrt();
        q.sin() / q
    } else {
        let q = (-z).sqrt();
        q.sinh() / q
    }
}

// Derivatives in z of cos(sqrt(z)) and sin(sqrt(z))/sqrt(z) through order
// `top` at z0. Both satisfy 4 z y'' + a y' + y = 0 (a = 2 and 6), so n
// differentiations give 4 z y^(n+2) + (4n + a) y^(n+1) + y^(n) = 0, a short
// recurrence in the derivative ladder. Near z0 = 0 the recurrence would
// divide by 4 z0, so the termwise-differentiated Maclaurin series is summed
// instead (z0 = 0 occurs on every zero-height covering segment).
fn sqrt_trig_derivs(z0: f64, top: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![0.0; top + 1];
    let mut s = vec![0.0; top + 1];
    if z0.abs() < 0.5 {
        for j in 0..=top {
            // Leading (n = j) terms of the differentiated series:
            // (-1)^j j!/(2j)! and (-1)^j j!/(2j+1)!.
            let mut ratio = if j % 2 == 0 { 1.0 } else { -1.0 };
            for i in j + 1..=2 * j {
                ratio /= i as f64;
            }
            let mut term_c = ratio;
            let mut term_s = ratio / (2.0 * j as f64 + 1.0);
            let (mut sum_c, mut sum_s) = (0.0, 0.0);
            let mut n = j as f64;
            loop {
                sum_c += term_c;
                sum_s += term_s;
                if term_c.abs() + term_s.abs() < 1e-18 * (sum_c.abs() + sum_s.abs() + 1.0) {
                    break;
                }
                // n -> n+1: the n!/(n-j)! factor grows by (n+1)/(n+1-j), the
                // factorials by (2n+1)(2n+2) and (2n+2)(2n+3).
                let grow = -z0 * (n + 1.0) / (n + 1.0 - j as f64);
                term_c *= grow / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
                term_s *= grow / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
                n += 1.0;
            }
            c[j] = sum_c;
            s[j] = sum_s;
        }
    } else {
        c[0] = cos_sqrt(z0);
        s[0] = sinc_sqrt(z0);
        if top >= 1 {
            c[1] = -0.5 * s[0];
            s[1] = (c[0] - s[0]) / (2.0 * z0);
        }
        for n in 0..top.saturating_sub(1) {
            let nf = n as f64;
            c[n + 2] = -((4.0 * nf + 2.0) * c[n + 1] + c[n]) / (4.0 * z0);
            s[n + 2] = -((4.0 * nf + 6.0) * s[n + 1] + s[n]) / (4.0 * z0);
        }
    }
    (c, s)
}

impl PotentialSpec {
    /// Square barrier of the given height on [-range, range].
    pub fn square_barrier(height: f64, range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "range must be positive, got {range}"
            )));
        }
        if !(height >= 0.0) {
            return Err(Error::InvalidPotential(format!(
                "height must be nonnegative (negative wells may bind states), got {height}"
            )));
        }
        Ok(Self {
            range,
            shape: Shape::SquareBarrier { height },
        })
    }

    /// The trivial potential V = 0 with a bookkeeping range.
    pub fn free(range: f64) -> Self {
        Self::square_barrier(0.0, range).expect("V = 0 is always valid")
    }

    /// Piecewise-constant potential; segments must lie inside [-range, range],
    /// must not overlap, and must have nonnegative values. Gaps count as V = 0.
    pub fn piecewise(range: f64, mut segments: Vec<Segment>) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "range must be positive, got {range}"
            )));
        }
        segments.sort_by(|a, b| a.left.total_cmp(&b.left));
        let mut prev_right = -range;
        for s in &segments {
            if !(s.left < s.right) {
                return Err(Error::InvalidPotential(format!(
                    "segment [{}, {}] has nonpositive width",
                    s.left, s.right
                )));
            }
            if s.left < -range - 1e-12 || s.right > range + 1e-12 {
                return Err(Error::InvalidPotential(format!(
                    "segment [{}, {}] extends outside [-{range}, {range}]",
                    s.left, s.right
                )));
            }
            if s.left < prev_right - 1e-12 {
                return Err(Error::InvalidPotential(format!(
                    "segments overlap near x = {}",
                    s.left
                )));
            }
            if !(s.value >= 0.0) {
                return Err(Error::InvalidPotential(format!(
                    "segment value {} is negative (bound states excluded)",
                    s.value
                )));
            }
            prev_right = s.right;
        }
        Ok(Self {
            range,
            shape: Shape::Piecewise { segments },
        })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Barrier height V0 (square barrier) or the maximum segment value.
    pub fn height(&self) -> f64 {
        match &self.shape {
            Shape::SquareBarrier { height } => *height,
            Shape::Piecewise { segments } => {
                segments.iter().map(|s| s.value).fold(0.0, f64::max)
            }
        }
    }

    /// k_b = sqrt(V0), the momentum scale separating tunneling from
    /// over-barrier propagation.
    pub fn k_b(&self) -> f64 {
        self.height().sqrt()
    }

    pub fn is_free(&self) -> bool {
        self.height() == 0.0
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if x.abs() > self.range {
            return 0.0;
        }
        match &self.shape {
            Shape::SquareBarrier { height } => *height,
            Shape::Piecewise { segments } => segments
                .iter()
                .find(|s| s.left <= x && x < s.right)
                .map_or(0.0, |s| s.value),
        }
    }

    /// Contiguous segments covering exactly [-range, range] (gaps filled with
    /// V = 0); the interior propagation and transfer matrices walk these.
    pub fn covering_segments(&self) -> Vec<Segment> {
        match &self.shape {
            Shape::SquareBarrier { height } => vec![Segment {
                left: -self.range,
                right: self.range,
                value: *height,
            }],
            Shape::Piecewise { segments } => {
                let mut out = Vec::with_capacity(2 * segments.len() + 1);
                let mut cursor = -self.range;
                for s in segments {
                    if s.left > cursor + 1e-12 {
                        out.push(Segment {
                            left: cursor,
                            right: s.left,
                            value: 0.0,
                        });
                    }
                    out.push(*s);
                    cursor = s.right;
                }
                if cursor < self.range - 1e-12 {
                    out.push(Segment {
                        left: cursor,
                        right: self.range,
                        value: 0.0,
                    });
                }
                if out.is_empty() {
                    out.push(Segment {
                        left: -self.range,
                        right: self.range,
                        value: 0.0,
                    });
                }
                out
            }
        }
    }

    /// Scattering amplitudes at momentum k != 0.
    pub fn amplitudes(&self, k: f64) -> Result<ScatteringData> {
        if k == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        if !k.is_finite() {
            return Err(Error::InvalidInput(format!("momentum must be finite, got {k}")));
        }
        let kappa = k.abs();
        let rho = {
            let rho2 = self.k_b() * self.k_b() - k * k;
            if rho2 >= 0.0 {
                Complex64::new(rho2.sqrt(), 0.0)
            } else {
                Complex64::new(0.0, (-rho2).sqrt())
            }
        };
        if self.is_free() {
            let (g_plus, g_minus, transmission) = if k > 0.0 {
                (1.0, 0.0, 1.0)
            } else {
                (0.0, 1.0, 0.0)
            };
            return Ok(ScatteringData {
                k,
                rho,
                g_plus: Complex64::new(g_plus, 0.0),
                g_minus: Complex64::new(g_minus, 0.0),
                transmission: Complex64::new(transmission, 0.0),
            });
        }
        let (refl, trans) = match &self.shape {
            Shape::SquareBarrier { height } => self.barrier_amplitudes(kappa, *height),
            Shape::Piecewise { .. } => self.transfer_amplitudes(kappa)?,
        };
        Ok(if k > 0.0 {
            ScatteringData {
                k,
                rho,
                g_plus: Complex64::new(1.0, 0.0),
                g_minus: refl,
                transmission: trans,
            }
        } else {
            // Right incidence: the transmitted wave exits on the left, the
            // reflected wave on the right.
            let (_, refl_right, trans_right) = self.right_incidence(kappa)?;
            ScatteringData {
                k,
                rho,
                g_plus: Complex64::new(0.0, 0.0),
                g_minus: trans_right,
                transmission: refl_right,
            }
        })
    }

    // Left-incidence (reflection, transmission) at kappa > 0.
    fn barrier_amplitudes(&self, kappa: f64, height: f64) -> (Complex64, Complex64) {
        let r = self.range;
        let kb2 = height;
        let rho2 = kb2 - kappa * kappa;
        // cosh(2 rho R) and sinh(2 rho R)/rho are entire in rho^2, so one real
        // expression covers tunneling (rho real), over-barrier (rho imaginary)
        // and the removable point rho = 0.
        let z = 4.0 * r * r * rho2;
        let c = cos_sqrt(-z); // cosh(2 rho R)
        let s = 2.0 * r * sinc_sqrt(-z); // sinh(2 rho R) / rho
        // transmission = 2ik e^{-2ikR} / [2ik cosh(2 rho R) + (2k^2 - k_b^2) sinh(2 rho R)/rho]
        // reflection   = k_b^2 (sinh(2 rho R)/rho) e^{-2ikR} / [same denominator]
        // The denominator tends to -k_b sinh(2 k_b R) != 0 as k -> 0, keeping
        // the k -> 0 limits finite without special-casing.
        let denom = Complex64::new((2.0 * kappa * kappa - kb2) * s, 2.0 * kappa * c);
        let phase = Complex64::from_polar(1.0, -2.0 * kappa * r);
        let trans = Complex64::new(0.0, 2.0 * kappa) * phase / denom;
        let refl = kb2 * s * phase / denom;
        (refl, trans)
    }

    // Left-incidence (reflection, transmission) at kappa > 0 by a transfer
    // matrix in the (phi, phi') basis across the covering segments.
    fn transfer_amplitudes(&self, kappa: f64) -> Result<(Complex64, Complex64)> {
        let m = self.transfer_matrix(kappa)?;
        let r = self.range;
        let u = Complex64::from_polar(1.0, -kappa * r); // e^{-i kappa R}
        let v = u.conj(); // e^{+i kappa R}
        let ik = Complex64::new(0.0, kappa);
        let p = ik * m[0][0] - m[1][0];
        let q = ik * m[1][1] + kappa * kappa * m[0][1];
        let denom = p + q;
        let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
        if denom.norm() < 1e-14 * kappa.max(1.0) * scale {
            return Err(Error::SingularTransfer {
                cond: scale * scale / denom.norm().max(f64::MIN_POSITIVE),
            });
        }
        let refl = u * (q - p) / (v * denom);
        let phi_l = u + refl * v;
        let dphi_l = ik * (u - refl * v);
        let trans = (m[0][0] * phi_l + m[0][1] * dphi_l) / v;
        Ok((refl, trans))
    }

    // Right-incidence (incident from x > R, moving left) at kappa > 0:
    // returns (incident, reflection, transmission-to-the-left).
    fn right_incidence(&self, kappa: f64) -> Result<(Complex64, Complex64, Complex64)> {
        match &self.shape {
            // A symmetric barrier scatters identically from both sides.
            Shape::SquareBarrier { height } => {
                let (refl, trans) = self.barrier_amplitudes(kappa, *height);
                Ok((Complex64::new(1.0, 0.0), refl, trans))
            }
            Shape::Piecewise { .. } => {
                let m = self.transfer_matrix(kappa)?;
                let r = self.range;
                let u = Complex64::from_polar(1.0, -kappa * r);
                let v = u.conj();
                let ik = Complex64::new(0.0, kappa);
                let p = ik * m[0][0] - m[1][0];
                let q = ik * m[1][1] + kappa * kappa * m[0][1];
                let denom = p + q;
                let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
                if denom.norm() < 1e-14 * kappa.max(1.0) * scale {
                    return Err(Error::SingularTransfer {
                        cond: scale * scale / denom.norm().max(f64::MIN_POSITIVE),
                    });
                }
                let trans = Complex64::new(0.0, 2.0 * kappa) * u / (v * denom);
                let refl = (trans * v * (m[0][0] - ik * m[0][1]) - u) / v;
                Ok((Complex64::new(1.0, 0.0), refl, trans))
            }
        }
    }

    // Transfer matrix for (phi, phi') from -R to +R at kappa > 0; entries are
    // real because q^2 = k^2 - V is real on every segment.
    fn transfer_matrix(&self, kappa: f64) -> Result<[[f64; 2]; 2]> {
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for seg in self.covering_segments() {
            let len = seg.right - seg.left;
            let q2 = kappa * kappa - seg.value;
            let z = q2 * len * len;
            let c = cos_sqrt(z);
            let s = len * sinc_sqrt(z);
            let step = [[c, s], [-q2 * s, c]];
            m = mat_mul(step, m);
            if !m.iter().flatten().all(|x| x.is_finite()) {
                return Err(Error::SingularTransfer { cond: f64::INFINITY });
            }
        }
        Ok(m)
    }

    // Transfer matrix as truncated momentum expansions around kappa = 0.
    // Every entry is entire in kappa^2, so composing the z-derivative
    // ladders with z = z0 + (len kappa)^2 is exact through the retained
    // degrees: the j-th z-derivative lands on kappa^(2j).
    fn transfer_matrix_series(&self) -> [[Taylor; 2]; 2] {
        let re = |x: f64| Complex64::new(x, 0.0);
        let mut m = [
            [Taylor::constant(re(1.0)), Taylor::default()],
            [Taylor::default(), Taylor::constant(re(1.0))],
        ];
        for seg in self.covering_segments() {
            let len = seg.right - seg.left;
            let (cd, sd) = sqrt_trig_derivs(-seg.value * len * len, 3);
            let mut c = Taylor::default();
            let mut s = Taylor::default();
            let mut j_factorial = 1.0;
            for j in 0..=3usize {
                if j > 0 {
                    j_factorial *= j as f64;
                }
                let shift = len.powi(2 * j as i32) / j_factorial;
                c.0[2 * j] = re(cd[j] * shift);
                s.0[2 * j] = re(len * sd[j] * shift);
            }
            let q2 = Taylor::monomial(re(1.0), 2) - Taylor::constant(re(seg.value));
            let step = [[c, s], [-(q2 * s), c]];
            m = [
                [
                    step[0][0] * m[0][0] + step[0][1] * m[1][0],
                    step[0][0] * m[0][1] + step[0][1] * m[1][1],
                ],
                [
                    step[1][0] * m[0][0] + step[1][1] * m[1][0],
                    step[1][0] * m[0][1] + step[1][1] * m[1][1],
                ],
            ];
        }
        m
    }

    // Momentum expansion of g_minus around k = 0 on the given side, exact
    // through degree six up to coefficient roundoff. For k -> 0+ this is the
    // left-incidence reflection; for k -> 0- it is the right-incidence
    // transmission expanded in kappa = |k| and reflected into a series in k
    // (d/dk = -d/dkappa). Transmission is reciprocal (det M = 1), so the
    // left-incidence matrix serves both sides.
    fn g_minus_series(&self, side: Side) -> Result<Taylor> {
        let m = self.transfer_matrix_series();
        let r = self.range;
        let u = Taylor::exp_linear(Complex64::new(0.0, -r));
        let v = Taylor::exp_linear(Complex64::new(0.0, r));
        let ik = Taylor::monomial(Complex64::new(0.0, 1.0), 1);
        let kappa2 = Taylor::monomial(Complex64::new(1.0, 0.0), 2);
        let p = ik * m[0][0] - m[1][0];
        let q = ik * m[1][1] + kappa2 * m[0][1];
        let denom = p + q;
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |a, t| a.max(t.coefficient(0).norm()));
        if denom.coefficient(0).norm() < 1e-14 * scale {
            return Err(Error::SingularTransfer {
                cond: scale * scale / denom.coefficient(0).norm().max(f64::MIN_POSITIVE),
            });
        }
        Ok(match side {
            Side::Pos => u * (q - p) / (v * denom),
            Side::Neg => (u * Complex64::new(2.0, 0.0) * ik / (v * denom)).reflect(),
        })
    }

    /// Samples of the stationary scattering state phi(x, k), k != 0.
    pub fn scattering_state(&self, k: f64, xs: &[f64]) -> Result<Vec<Complex64>> {
        if k == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        let norm = 1.0 / sqrt_2pi();
        if self.is_free() {
            return Ok(xs
                .iter()
                .map(|&x| Complex64::from_polar(norm, k * x))
                .collect());
        }
        let data = self.amplitudes(k)?;
        let kappa = k.abs();
        let r = self.range;
        let segs = self.covering_segments();
        // Boundary values at x = -R from the left-exterior expansion.
        let at_minus_r = |coef_pos: Complex64, coef_neg: Complex64| {
            let e_neg = Complex64::from_polar(1.0, -kappa * r); // e^{+i kappa (-R)}
            let e_pos = e_neg.conj();
            let phi = coef_pos * e_neg + coef_neg * e_pos;
            let dphi = Complex64::new(0.0, kappa) * (coef_pos * e_neg - coef_neg * e_pos);
            (phi * norm, dphi * norm)
        };
        let (phi0, dphi0) = at_minus_r(data.g_plus, data.g_minus);
        let right_in = data.right_incoming();
        xs.iter()
            .map(|&x| {
                if x <= -r {
                    let e = Complex64::from_polar(1.0, kappa * x);
                    Ok(norm * (data.g_plus * e + data.g_minus * e.conj()))
                } else if x >= r {
                    let e = Complex64::from_polar(1.0, kappa * x);
                    Ok(norm * (data.transmission * e + right_in * e.conj()))
                } else {
                    // March (phi, phi') from -R through whole segments, then a
                    // partial step into the segment containing x.
                    let (mut phi, mut dphi) = (phi0, dphi0);
                    for seg in &segs {
                        if x >= seg.right {
                            let len = seg.right - seg.left;
                            let q2 = kappa * kappa - seg.value;
                            let z = q2 * len * len;
                            let (c, s) = (cos_sqrt(z), len * sinc_sqrt(z));
                            let (p, d) = (phi, dphi);
                            phi = c * p + s * d;
                            dphi = -q2 * s * p + c * d;
                        } else {
                            let len = x - seg.left;
                            if len > 0.0 {
                                let q2 = kappa * kappa - seg.value;
                                let z = q2 * len * len;
                                let (c, s) = (cos_sqrt(z), len * sinc_sqrt(z));
                                let (p, d) = (phi, dphi);
                                phi = c * p + s * d;
                                dphi = -q2 * s * p + c * d;
                            }
                            let _ = dphi;
                            break;
                        }
                    }
                    Ok(phi)
                }
            })
            .collect()
    }

    /// Closed-form zero-momentum derivatives of g_minus for the square
    /// barrier, orders 0 and 1 only.
    pub fn g_minus_derivative_at_zero(&self, side: Side, order: u32) -> Result<Complex64> {
        match &self.shape {
            Shape::SquareBarrier { height } if *height > 0.0 => {}
            Shape::SquareBarrier { .. } => return Err(Error::FreeParticleLimits),
            Shape::Piecewise { .. } => {
                return Err(Error::InvalidPotential(
                    "closed-form zero-momentum derivatives exist only for the square barrier"
                        .into(),
                ))
            }
        }
        let kb = self.k_b();
        let r = self.range;
        match (side, order) {
            (Side::Pos, 0) => Ok(Complex64::new(-1.0, 0.0)),
            (Side::Neg, 0) => Ok(Complex64::new(0.0, 0.0)),
            // d/dk g_minus at k -> 0+ : 2iR - 2i coth(2 k_b R)/k_b;
            // at k -> 0- (transmission branch): +2i / (k_b sinh(2 k_b R)).
            (Side::Pos, 1) => {
                let th = (2.0 * kb * r).tanh();
                Ok(Complex64::new(0.0, 2.0 * r - 2.0 / (kb * th)))
            }
            (Side::Neg, 1) => Ok(Complex64::new(0.0, 2.0 / (kb * (2.0 * kb * r).sinh()))),
            (_, n) => Err(Error::UnsupportedOrder {
                order: n,
                reason: "closed forms cover orders 0 and 1; use g_minus_derivatives for higher orders".into(),
            }),
        }
    }

    /// Zero-momentum derivatives of g_minus through `max_order` (<= 4), read
    /// off the exact momentum expansion of the outgoing amplitude; accurate
    /// to f64 roundoff on the expansion coefficients.
    pub fn g_minus_derivatives(&self, side: Side, max_order: u32) -> Result<Vec<Complex64>> {
        if max_order > 4 {
            return Err(Error::UnsupportedOrder {
                order: max_order,
                reason: "derivatives beyond order 4 are out of scope".into(),
            });
        }
        if self.is_free() {
            // g_minus is identically 0 for k > 0 and 1 for k < 0.
            let mut out = vec![Complex64::new(0.0, 0.0); (max_order + 1) as usize];
            if side == Side::Neg {
                out[0] = Complex64::new(1.0, 0.0);
            }
            return Ok(out);
        }
        let series = self.g_minus_series(side)?;
        Ok((0..=max_order as usize).map(|n| series.derivative(n)).collect())
    }

    /// d^n/dk^n phi(x, k) at k -> side*0 for left-exterior x < -R, from the
    /// exterior plane-wave form and the g_minus derivative table.
    pub fn dkn_phi_exterior_left(&self, side: Side, order: u32, xs: &[f64]) -> Result<Vec<Complex64>> {
        let gm = self.g_minus_derivatives(side, order)?;
        let norm = 1.0 / sqrt_2pi();
        let n = order as usize;
        Ok(xs
            .iter()
            .map(|&x| {
                assert!(
                    x <= -self.range,
                    "dkn_phi_exterior_left needs x <= -range, got {x}"
                );
                let ix = Complex64::new(0.0, x);
                let mut out = Complex64::new(0.0, 0.0);
                if side == Side::Pos {
                    // phi = [e^{ikx} + g_minus(k) e^{-ikx}] / sqrt(2 pi)
                    out += ix.powu(order);
                    for j in 0..=n {
                        out += binomial(n, j) * gm[j] * (-ix).powu((n - j) as u32);
                    }
                } else {
                    // phi = g_minus(k) e^{ikx} / sqrt(2 pi)  (|k| = -k)
                    for j in 0..=n {
                        out += binomial(n, j) * gm[j] * ix.powu((n - j) as u32);
                    }
                }
                norm * out
            })
            .collect())
    }

    /// d/dk phi(x, k) at k -> side*0. Left-exterior points use the closed
    /// exterior form; interior and right-exterior points fall back to
    /// one-sided Richardson differentiation of the sampled state. Errors if
    /// the potential has a zero-energy resonance (phi(x, +-0) != 0), except
    /// for the trivial V = 0 case where the derivative is ix/sqrt(2 pi).
    pub fn dk_phi_at_zero(&self, side: Side, xs: &[f64]) -> Result<Vec<Complex64>> {
        let norm = 1.0 / sqrt_2pi();
        if self.is_free() {
            return Ok(xs.iter().map(|&x| Complex64::new(0.0, x * norm)).collect());
        }
        self.check_no_zero_energy_resonance(side)?;
        let gm1 = self.g_minus_derivatives(side, 1)?[1];
        xs.iter()
            .map(|&x| {
                if x < -self.range {
                    Ok(match side {
                        Side::Pos => norm * (Complex64::new(0.0, 2.0 * x) + gm1),
                        Side::Neg => norm * gm1,
                    })
                } else {
                    let mut f = |k: f64| {
                        self.scattering_state(k, std::slice::from_ref(&x)).expect("k != 0")[0]
                    };
                    // phi oscillates like e^{ikx}, so keep the largest ladder
                    // node well inside one phase radian: h0 ~ 1/|x|.
                    let h0 = 4e-3 / (x.abs() / 4.0).max(1.0);
                    let (d, _) = one_sided_derivative(&mut f, side.sign(), 1, h0, 5);
                    Ok(d)
                }
            })
            .collect()
    }

    /// Verify phi(x, side*0) = 0 by probing the state at tiny |k|.
    pub fn check_no_zero_energy_resonance(&self, side: Side) -> Result<()> {
        let probe_k = side.sign() * 1e-6;
        let probe_x = [-self.range - 1.0, self.range + 1.0];
        let phi = self.scattering_state(probe_k, &probe_x)?;
        let magnitude = phi.iter().map(|p| p.norm()).fold(0.0, f64::max);
        if magnitude > 1e-4 {
            return Err(Error::ZeroEnergyResonance {
                side_sign: if side == Side::Pos { '+' } else { '-' },
                magnitude,
            });
        }
        Ok(())
    }
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_spaced;

    fn barrier() -> PotentialSpec {
        PotentialSpec::square_barrier(16.0, 1.0).unwrap()
    }

    fn assert_c_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn constructor_validation() {
        assert!(PotentialSpec::square_barrier(16.0, -1.0).is_err());
        assert!(PotentialSpec::square_barrier(-2.0, 1.0).is_err());
        let spec = barrier();
        assert_eq!(spec.k_b(), 4.0);
        assert!(PotentialSpec::free(1.0).is_free());
        assert!(PotentialSpec::piecewise(
            1.0,
            vec![Segment { left: -0.5, right: 0.5, value: -1.0 }]
        )
        .is_err());
        assert!(PotentialSpec::piecewise(
            1.0,
            vec![Segment { left: -0.5, right: 2.0, value: 1.0 }]
        )
        .is_err());
        assert!(PotentialSpec::piecewise(
            1.0,
            vec![
                Segment { left: -0.5, right: 0.2, value: 1.0 },
                Segment { left: 0.0, right: 0.5, value: 1.0 },
            ]
        )
        .is_err());
    }

    #[test]
    fn known_amplitudes_at_k_1() {
        // Independently computed from the closed forms at V0 = 16, R = 1.
        let d = barrier().amplitudes(1.0).unwrap();
        assert_c_close(
            d.transmission,
            Complex64::new(-4.175364946446757e-4, -3.185994349233072e-5),
            1e-15,
        );
        assert_c_close(
            d.g_minus,
            Complex64::new(-0.07608339321160163, 0.9971013699346865),
            1e-13,
        );
        assert!((d.transmission.norm_sqr() - 1.753517803594978e-7).abs() < 1e-20);
        assert!(d.unitarity_defect() < 1e-15);
    }

    #[test]
    fn more_known_amplitudes() {
        let pot = barrier();
        let d = pot.amplitudes(0.5).unwrap();
        assert_c_close(
            d.transmission,
            Complex64::new(-1.206960745162212e-4, -1.297287780209567e-4),
            1e-16,
        );
        // Above the barrier (rho imaginary) the same expression continues.
        let d = pot.amplitudes(6.0).unwrap();
        assert_c_close(
            d.transmission,
            Complex64::new(-0.9883343495581893, -0.06751029595585128),
            1e-13,
        );
        assert_c_close(
            d.g_minus,
            Complex64::new(-0.009303577559900111, 0.13620211770721892),
            1e-13,
        );
        // Exactly at the barrier top rho = 0: the removable point.
        let d = pot.amplitudes(4.0).unwrap();
        assert!(d.transmission.is_finite() && d.g_minus.is_finite());
        assert!(d.unitarity_defect() < 1e-14);
        assert!((d.transmission.norm_sqr() - 64.0 / 1088.0).abs() < 1e-14);
    }

    #[test]
    fn unitarity_across_momentum_range() {
        let pot = barrier();
        for k in log_spaced(1e-3, 40.0, 200) {
            for sk in [k, -k] {
                let d = pot.amplitudes(sk).unwrap();
                assert!(
                    d.unitarity_defect() < 1e-12,
                    "unitarity defect {} at k = {sk}",
                    d.unitarity_defect()
                );
            }
        }
    }

    #[test]
    fn negative_momentum_mirrors_positive() {
        let pot = barrier();
        let dp = pot.amplitudes(2.0).unwrap();
        let dn = pot.amplitudes(-2.0).unwrap();
        // Transmission through a symmetric barrier is side-independent, and
        // it exits on the left for right incidence.
        assert_c_close(dn.g_minus, dp.transmission, 1e-15);
        assert_c_close(dn.transmission, dp.g_minus, 1e-15);
        assert_eq!(dn.g_plus, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn free_particle_amplitudes() {
        let free = PotentialSpec::free(1.0);
        let d = free.amplitudes(0.7).unwrap();
        assert_eq!(d.g_minus, Complex64::new(0.0, 0.0));
        assert_eq!(d.transmission, Complex64::new(1.0, 0.0));
        let d = free.amplitudes(-0.7).unwrap();
        assert_eq!(d.g_minus, Complex64::new(1.0, 0.0));
        assert!(free.amplitudes(0.0).is_err());
    }

    #[test]
    fn transfer_matrix_route_matches_closed_form() {
        let closed = barrier();
        let piece = PotentialSpec::piecewise(
            1.0,
            vec![Segment { left: -1.0, right: 1.0, value: 16.0 }],
        )
        .unwrap();
        for k in log_spaced(1e-3, 40.0, 120) {
            for sk in [k, -k] {
                let a = closed.amplitudes(sk).unwrap();
                let b = piece.amplitudes(sk).unwrap();
                assert!(
                    (a.g_minus - b.g_minus).norm() < 1e-12,
                    "g_minus mismatch at k = {sk}: {} vs {}",
                    a.g_minus,
                    b.g_minus
                );
                assert!((a.transmission - b.transmission).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn split_barrier_equals_whole_barrier() {
        // Cutting the barrier into unequal constant pieces must not change
        // the transfer-matrix product.
        let piece = PotentialSpec::piecewise(
            1.0,
            vec![
                Segment { left: -1.0, right: -0.3, value: 16.0 },
                Segment { left: -0.3, right: 0.55, value: 16.0 },
                Segment { left: 0.55, right: 1.0, value: 16.0 },
            ],
        )
        .unwrap();
        let closed = barrier();
        for k in [0.37, 1.0, 3.9, 4.0, 4.1, 11.0, -0.8, -5.5] {
            let a = closed.amplitudes(k).unwrap();
            let b = piece.amplitudes(k).unwrap();
            assert!((a.g_minus - b.g_minus).norm() < 1e-12);
            assert!((a.transmission - b.transmission).norm() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_piecewise_is_unitary_and_reciprocal() {
        let pot = PotentialSpec::piecewise(
            2.0,
            vec![
                Segment { left: -1.5, right: -0.2, value: 7.0 },
                Segment { left: 0.4, right: 1.9, value: 2.5 },
            ],
        )
        .unwrap();
        for k in [0.3, 1.1, 2.7, 5.0] {
            let dp = pot.amplitudes(k).unwrap();
            let dn = pot.amplitudes(-k).unwrap();
            assert!(dp.unitarity_defect() < 1e-12);
            assert!(dn.unitarity_defect() < 1e-12);
            // Transmission is reciprocal even without mirror symmetry.
            assert_c_close(dn.g_minus, dp.transmission, 1e-12);
        }
    }

    #[test]
    fn scattering_state_exterior_and_interior_values() {
        let pot = barrier();
        // Frozen closed-form samples.
        let phi = pot.scattering_state(1.0, &[-5.0, 0.5, 5.0]).unwrap();
        assert_c_close(phi[0], Complex64::new(0.4860014243543712, 0.5244983687220530), 1e-13);
        assert_c_close(phi[1], Complex64::new(-4.095725451158843e-4, -4.508767616449114e-4), 1e-13);
        assert_c_close(phi[2], Complex64::new(-5.943864484959901e-5, 1.561254307363846e-4), 1e-13);
        // Right incidence at the mirrored point equals the mirrored state for
        // a symmetric potential.
        let phi_neg = pot.scattering_state(-1.0, &[-5.0]).unwrap();
        assert_c_close(phi_neg[0], phi[2], 1e-14);
        // Inside the classically forbidden region at k = 3.5.
        let phi = pot.scattering_state(3.5, &[-0.5]).unwrap();
        assert_c_close(phi[0], Complex64::new(-0.17234379277684284, 0.20084091815237092), 1e-13);
    }

    #[test]
    fn scattering_state_is_continuous_at_edges() {
        let pot = barrier();
        let eps = 1e-9;
        for k in [1.0, -1.0, 3.9, 4.2, -7.0] {
            for edge in [-1.0, 1.0] {
                let phi = pot
                    .scattering_state(k, &[edge - eps, edge + eps])
                    .unwrap();
                // phi and phi' continuous => first difference O(eps).
                assert!(
                    (phi[0] - phi[1]).norm() < 40.0 * eps,
                    "jump at edge {edge}, k = {k}: {}",
                    (phi[0] - phi[1]).norm()
                );
            }
        }
    }

    #[test]
    fn no_zero_energy_resonance_for_the_barrier() {
        let pot = barrier();
        let phi = pot.scattering_state(1e-6, &[-5.0]).unwrap();
        assert!(phi[0].norm() <= 1e-5);
        assert!((phi[0].norm() - 3.391009428297016e-6).abs() < 1e-12);
        pot.check_no_zero_energy_resonance(Side::Pos).unwrap();
        pot.check_no_zero_energy_resonance(Side::Neg).unwrap();
    }

    #[test]
    fn free_plane_wave_state() {
        let free = PotentialSpec::free(1.0);
        let phi = free.scattering_state(0.7, &[2.0]).unwrap();
        let expect = Complex64::from_polar(1.0 / sqrt_2pi(), 1.4);
        assert_c_close(phi[0], expect, 1e-15);
    }

    #[test]
    fn closed_form_zero_momentum_derivatives() {
        let pot = barrier();
        assert_c_close(
            pot.g_minus_derivative_at_zero(Side::Pos, 0).unwrap(),
            Complex64::new(-1.0, 0.0),
            0.0,
        );
        assert_c_close(
            pot.g_minus_derivative_at_zero(Side::Neg, 0).unwrap(),
            Complex64::new(0.0, 0.0),
            0.0,
        );
        // 2i - (i/2) coth(8) and 2i/(4 sinh 8).
        assert_c_close(
            pot.g_minus_derivative_at_zero(Side::Pos, 1).unwrap(),
            Complex64::new(0.0, 1.4999998874648126),
            1e-15,
        );
        assert_c_close(
            pot.g_minus_derivative_at_zero(Side::Neg, 1).unwrap(),
            Complex64::new(0.0, 3.3546266565386153e-4),
            1e-18,
        );
        assert!(matches!(
            pot.g_minus_derivative_at_zero(Side::Pos, 2),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(matches!(
            PotentialSpec::free(1.0).g_minus_derivative_at_zero(Side::Pos, 0),
            Err(Error::FreeParticleLimits)
        ));
    }

    #[test]
    fn derivative_table_matches_symbolic_coefficients() {
        // Taylor coefficients of g_minus at 0+ and 0-, computed symbolically
        // for V0 = 16, R = 1; the momentum expansion reproduces them to f64
        // roundoff.
        let gm_plus = [
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.4999998874648126),
            Complex64::new(2.2499997749296506, 0.0),
            Complex64::new(0.0, -3.4062499788997284),
            Complex64::new(-5.250000787746217, 0.0),
        ];
        let gm_minus = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 3.3546266565386153e-4),
            Complex64::new(-1.0063879214588767e-3, 0.0),
            Complex64::new(0.0, -1.8240779047307121e-3),
            Complex64::new(1.9289098178665786e-3, 0.0),
        ];
        let pot = barrier();
        let dp = pot.g_minus_derivatives(Side::Pos, 4).unwrap();
        let dn = pot.g_minus_derivatives(Side::Neg, 4).unwrap();
        for n in 0..=4 {
            let tol = 1e-14;
            assert!(
                (dp[n] - gm_plus[n]).norm() <= tol * gm_plus[n].norm().max(1.0),
                "order {n} (0+): {} vs {}",
                dp[n],
                gm_plus[n]
            );
            assert!(
                (dn[n] - gm_minus[n]).norm() <= tol * gm_minus[n].norm().max(1.0),
                "order {n} (0-): {} vs {}",
                dn[n],
                gm_minus[n]
            );
        }
        // The piecewise route walks per-segment expansions and must land on
        // the same table as the single-segment barrier.
        let split = PotentialSpec::piecewise(
            1.0,
            vec![
                Segment { left: -1.0, right: -0.3, value: 16.0 },
                Segment { left: -0.3, right: 1.0, value: 16.0 },
            ],
        )
        .unwrap();
        for side in Side::BOTH {
            let whole = pot.g_minus_derivatives(side, 4).unwrap();
            let parts = split.g_minus_derivatives(side, 4).unwrap();
            for n in 0..=4 {
                assert!(
                    (whole[n] - parts[n]).norm() <= 1e-13 * whole[n].norm().max(1.0),
                    "split vs whole, order {n}"
                );
            }
        }
    }

    #[test]
    fn dk_phi_closed_form_and_numeric_fallback_agree() {
        let pot = barrier();
        // Left exterior, both signs: closed form.
        let d = pot.dk_phi_at_zero(Side::Pos, &[-20.0]).unwrap();
        assert_c_close(d[0], Complex64::new(0.0, -15.359277840350202), 1e-12);
        let d = pot.dk_phi_at_zero(Side::Neg, &[-20.0]).unwrap();
        assert_c_close(d[0], Complex64::new(0.0, 1.3383024082549489e-4), 1e-15);
        // Interior and right-exterior values fall back to differentiation of
        // the sampled state; frozen values from the series expansion.
        let d = pot.dk_phi_at_zero(Side::Pos, &[0.5, 5.0]).unwrap();
        assert_c_close(d[0], Complex64::new(0.0, -5.0349555537036156e-4), 1e-9);
        assert_c_close(d[1], Complex64::new(0.0, -1.3383024082549489e-4), 1e-9);
        let d = pot.dk_phi_at_zero(Side::Neg, &[0.5]).unwrap();
        assert_c_close(d[0], Complex64::new(0.0, 0.026995652160536168), 1e-8);
        // The numeric fallback agrees with the closed exterior form too
        // (phase-scaled step: x h stays below half a radian on the ladder).
        let x = -20.0;
        let mut f = |k: f64| pot.scattering_state(k, &[x]).unwrap()[0];
        let (num, _) = one_sided_derivative(&mut f, 1.0, 1, 8e-4, 5);
        assert_c_close(num, Complex64::new(0.0, -15.359277840350202), 1e-6);
        // Free case: d/dk e^{ikx}/sqrt(2 pi) = ix/sqrt(2 pi).
        let free = PotentialSpec::free(1.0);
        let d = free.dk_phi_at_zero(Side::Neg, &[3.0]).unwrap();
        assert_c_close(d[0], Complex64::new(0.0, 3.0 / sqrt_2pi()), 1e-15);
    }

    #[test]
    fn exterior_derivative_formula_orders() {
        let pot = barrier();
        // Order 2 at x = -20, side +: [g2 - 2ix g1] / sqrt(2 pi); the x^2
        // terms cancel because g_minus(+0) = -1.
        let g = pot.g_minus_derivatives(Side::Pos, 2).unwrap();
        let expect = (g[2] - Complex64::new(0.0, -40.0) * g[1]) / sqrt_2pi();
        let got = pot.dkn_phi_exterior_left(Side::Pos, 2, &[-20.0]).unwrap()[0];
        assert_c_close(got, expect, 1e-12);
        // Order 1 reproduces dk_phi_at_zero.
        let got = pot.dkn_phi_exterior_left(Side::Pos, 1, &[-20.0]).unwrap()[0];
        assert_c_close(got, Complex64::new(0.0, -15.359277840350202), 1e-12);
    }
}
