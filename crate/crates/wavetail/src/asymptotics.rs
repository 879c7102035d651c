//! Long-time tails. Rotating the momentum integral off the real axis leaves
//! the k = 0 endpoint in charge at late times:
//!
//! ```text
//! psi(x, t) ~ sum_n Gamma((n+1)/2) E_n (it)^{-(n+1)/2},
//! E_n = [f^(n)(0+) + (-1)^n f^(n)(0-)] / (2 n!),   f(k) = phi(x, k) psi_tilde(k)
//! ```
//!
//! so each one-sided Taylor coefficient of f at zero momentum feeds one
//! inverse power of (it). Even n give half-integer powers of t; odd n would
//! give integer powers, but their coefficients cancel identically for the
//! potentials treated here and are pruned at roundoff scale. The leading
//! power is set by how fast psi_tilde vanishes at k = 0 — the t^{-3} vs
//! t^{-5} dichotomy in the nonescape probability.

use num_complex::Complex64;

use crate::numerics::{binomial, gamma_half, it_pow_neg, one_sided_derivative};
use crate::packets::PacketSpec;
use crate::potential::{sqrt_2pi, PotentialSpec, Side};
use crate::spectral;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailParity {
    /// Leading term from even n: psi ~ (it)^{-(2j+1)/2}.
    HalfIntegerPowers,
    /// Leading term from odd n (possible only when the one-sided
    /// coefficients fail to cancel; not realized by the barriers here).
    IntegerPowers,
}

/// One term coefficient * (it)^{-power} of the late-time expansion.
#[derive(Clone, Copy, Debug)]
pub struct TailTerm {
    pub power: f64,
    pub coefficient: Complex64,
}

/// Late-time expansion of psi(x, t) at a fixed position.
#[derive(Clone, Debug)]
pub struct TailExpansion {
    pub x: f64,
    pub m: u32,
    pub parity: TailParity,
    /// Surviving terms, ascending in power (the first dominates as t grows).
    pub terms: Vec<TailTerm>,
}

impl TailExpansion {
    /// Evaluate the truncated expansion at time t > 0.
    pub fn value(&self, t: f64) -> Complex64 {
        assert!(t > 0.0, "tail expansion needs t > 0, got {t}");
        self.terms
            .iter()
            .map(|term| term.coefficient * it_pow_neg(t, term.power))
            .sum()
    }

    pub fn leading_power(&self) -> f64 {
        self.terms[0].power
    }

    /// Decay exponent of the nonescape probability integral |psi|^2 dx:
    /// P(t) ~ t^(this), i.e. -2 * leading_power (-3 or -5 for the packet
    /// family studied here).
    pub fn nonescape_exponent(&self) -> f64 {
        -2.0 * self.leading_power()
    }
}

/// Build the late-time expansion of psi(x, t) at position x, carrying every
/// term the one-sided derivative tables can support (through (it)^{-3} for
/// left-exterior x) and pruning coefficients that cancel to roundoff.
pub fn tail_expansion(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    x: f64,
) -> Result<TailExpansion> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("position must be finite, got {x}")));
    }
    if pot.is_free() {
        return free_tail(packet, x);
    }
    for side in Side::BOTH {
        pot.check_no_zero_energy_resonance(side)?;
    }

    // One-sided tables of psi_tilde (orders 0..=4) and phi (orders 0..=4 in
    // the left exterior where closed forms exist, 0..=2 elsewhere). None
    // marks orders beyond reach; an exact zero partner makes them moot.
    let mut pt = Vec::new();
    let mut phi = Vec::new();
    for side in Side::BOTH {
        pt.push(
            spectral::derivatives_at_zero(pot, packet, side, 4)?
                .into_iter()
                .map(Some)
                .collect::<Vec<_>>(),
        );
        let tbl: Vec<Option<Complex64>> = if x <= -pot.range() {
            (0..=4)
                .map(|r| Ok(Some(pot.dkn_phi_exterior_left(side, r, &[x])?[0])))
                .collect::<Result<_>>()?
        } else {
            let d1 = pot.dk_phi_at_zero(side, &[x])?[0];
            let mut f = |k: f64| {
                pot.scattering_state(k, std::slice::from_ref(&x)).expect("k != 0")[0]
            };
            let h0 = 4e-3 / (x.abs() / 4.0).max(1.0);
            let (d2, _) = one_sided_derivative(&mut f, side.sign(), 2, h0, 5);
            // phi(x, side*0) = 0: guaranteed by the resonance check above.
            vec![Some(Complex64::new(0.0, 0.0)), Some(d1), Some(d2)]
        };
        phi.push(tbl);
    }

    let zero = Complex64::new(0.0, 0.0);
    let f_derivative = |n: usize, s: usize| -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..=n {
            let a = phi[s].get(r).copied().flatten();
            let b = pt[s].get(n - r).copied().flatten();
            // A factor that is exactly zero kills the product even when the
            // other factor's order is out of reach.
            if a == Some(zero) || b == Some(zero) {
                continue;
            }
            match (a, b) {
                (Some(av), Some(bv)) => acc += binomial(n, r) * av * bv,
                _ => return None,
            }
        }
        Some(acc)
    };

    let mut raw = Vec::new();
    for n in 0..=8usize {
        let (fp, fm) = match (f_derivative(n, 0), f_derivative(n, 1)) {
            (Some(fp), Some(fm)) => (fp, fm),
            _ => break,
        };
        let parity_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let e_n = (fp + parity_sign * fm) / (2.0 * factorial(n));
        raw.push(TailTerm {
            power: (n as f64 + 1.0) / 2.0,
            coefficient: gamma_of_half(n) * e_n,
        });
    }
    finalize(packet.m, x, raw)
}

/// V = 0 everywhere: f(k) = e^{ikx} psi_hat(k) / sqrt(2 pi) is analytic
/// through k = 0, so odd-n coefficients cancel exactly and the expansion is
/// built from the two-sided Taylor series alone.
fn free_tail(packet: &PacketSpec, x: f64) -> Result<TailExpansion> {
    let n_max = packet.m + 6;
    let ph = packet.momentum_derivatives_at_zero(n_max);
    let ix = Complex64::new(0.0, x);
    let mut raw = Vec::new();
    for n in (0..=n_max as usize).step_by(2) {
        let mut f_n = Complex64::new(0.0, 0.0);
        for r in 0..=n {
            f_n += binomial(n, r) * ix.powu(r as u32) * ph[n - r];
        }
        f_n /= sqrt_2pi();
        raw.push(TailTerm {
            power: (n as f64 + 1.0) / 2.0,
            coefficient: gamma_of_half(n) * f_n / factorial(n),
        });
    }
    finalize(packet.m, x, raw)
}

fn finalize(m: u32, x: f64, raw: Vec<TailTerm>) -> Result<TailExpansion> {
    let max_c = raw.iter().map(|t| t.coefficient.norm()).fold(0.0, f64::max);
    if max_c == 0.0 {
        return Err(Error::OrderUndetermined {
            max_order: raw.len().saturating_sub(1) as u32,
        });
    }
    // The integer-power coefficients cancel analytically; in f64 the
    // cancellation leaves roundoff dust far below 1e-9 relative, while
    // genuine terms sit above 1e-3 relative, so this cut has at least three
    // decades of margin on either side.
    let terms: Vec<TailTerm> = raw
        .into_iter()
        .filter(|t| t.coefficient.norm() >= 1e-6 * max_c)
        .collect();
    let parity = if (2.0 * terms[0].power).rem_euclid(2.0) == 1.0 {
        TailParity::HalfIntegerPowers
    } else {
        TailParity::IntegerPowers
    };
    Ok(TailExpansion { x, m, parity, terms })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Gamma((n+1)/2): half-integer arguments for even n, plain factorials for
/// odd n.
fn gamma_of_half(n: usize) -> f64 {
    if n % 2 == 0 {
        gamma_half((n / 2) as u32)
    } else {
        factorial((n - 1) / 2)
    }
}
