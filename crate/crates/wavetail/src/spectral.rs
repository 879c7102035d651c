//! The packet expanded over scattering states: psi(x, t) =
//! integral of e^{-i t k^2} phi(x, k) psi_tilde(k) dk, with
//! psi_tilde(k) = <phi_k, psi(., 0)>.
//!
//! For a packet launched far to the left of the range, the projection
//! collapses to closed form in terms of the free momentum amplitude:
//!
//! ```text
//! psi_tilde(k > 0) = psi_hat(k) + conj(g_minus(k)) psi_hat(-k)
//! psi_tilde(k < 0) = conj(transmission(|k|)) psi_hat(k)
//! ```
//!
//! (the incident, reflected and transmitted pieces of phi_k each pick up the
//! part of psi_hat living on their plane wave; overlap corrections are
//! O(e^{-x0^2 / a0^2}), utterly negligible here). The small-k structure of
//! psi_tilde decides the long-time decay, so the module also provides exact
//! one-sided derivatives at k = 0 and the resulting vanishing order.

use num_complex::Complex64;

use crate::numerics::{adaptive_gauss_c, adaptive_gauss_r, binomial};
use crate::packets::PacketSpec;
use crate::potential::{PotentialSpec, Side};
use crate::{Error, Result};

/// psi_tilde(k) for a single momentum (k != 0).
pub fn spectral_value(pot: &PotentialSpec, packet: &PacketSpec, k: f64) -> Result<Complex64> {
    let data = pot.amplitudes(k)?;
    Ok(if k > 0.0 {
        packet.momentum_amplitude(k) + data.g_minus.conj() * packet.momentum_amplitude(-k)
    } else {
        // data.g_minus is the left-exterior outgoing coefficient, i.e. the
        // transmitted wave for right incidence.
        data.g_minus.conj() * packet.momentum_amplitude(k)
    })
}

/// One-sided derivatives psi_tilde^{(n)}(side * 0) for n = 0..=max_order
/// (max_order <= 4), from the g_minus derivative table and the packet's
/// momentum Taylor series:
///
/// ```text
/// psi~^(n)(0+) = psi_hat^(n)(0)
///              + sum_l C(n,l) (-1)^l conj(g_minus^(n-l)(0+)) psi_hat^(l)(0)
/// psi~^(n)(0-) = sum_l C(n,l) (+1)^l conj(g_minus^(n-l)(0-)) psi_hat^(l)(0)
/// ```
pub fn derivatives_at_zero(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    side: Side,
    max_order: u32,
) -> Result<Vec<Complex64>> {
    if max_order > 4 {
        return Err(Error::UnsupportedOrder {
            order: max_order,
            reason: "spectral derivatives are supported through order 4".into(),
        });
    }
    // Free particle: psi_tilde = psi_hat, analytic through k = 0.
    if pot.is_free() {
        return Ok(packet.momentum_derivatives_at_zero(max_order));
    }
    let gm = pot.g_minus_derivatives(side, max_order)?;
    let ph = packet.momentum_derivatives_at_zero(max_order);
    let sgn = -side.sign();
    Ok((0..=max_order as usize)
        .map(|n| {
            let mut tot = if side == Side::Pos {
                ph[n]
            } else {
                Complex64::new(0.0, 0.0)
            };
            for l in 0..=n {
                tot += binomial(n, l) * sgn.powi(l as i32) * gm[n - l].conj() * ph[l];
            }
            tot
        })
        .collect())
}

/// Smallest n <= max_order with psi_tilde^{(n)}(0+) or psi_tilde^{(n)}(0-)
/// nonzero. The threshold is relative to the packet's own Taylor scale so
/// that exact zeros and roundoff dust both count as zero.
pub fn vanishing_order(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    max_order: u32,
) -> Result<u32> {
    let dp = derivatives_at_zero(pot, packet, Side::Pos, max_order)?;
    let dn = derivatives_at_zero(pot, packet, Side::Neg, max_order)?;
    let ph = packet.momentum_derivatives_at_zero(max_order);
    let mut scale = 1.0f64;
    for n in 0..=max_order as usize {
        scale = scale.max(ph[n].norm());
        if dp[n].norm() > 1e-8 * scale || dn[n].norm() > 1e-8 * scale {
            return Ok(n as u32);
        }
    }
    Err(Error::OrderUndetermined { max_order })
}

/// psi_tilde on a momentum grid, with the zero-momentum derivative tables
/// and detected vanishing order attached.
#[derive(Clone, Debug)]
pub struct SpectralAmplitude {
    pub ks: Vec<f64>,
    pub values: Vec<Complex64>,
    /// One-sided derivative tables at k = 0: index 0 from above, 1 from below.
    pub derivatives_at_zero: [Vec<Complex64>; 2],
    pub vanishing_order: u32,
}

pub fn spectral_amplitude(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    ks: &[f64],
) -> Result<SpectralAmplitude> {
    let values = ks
        .iter()
        .map(|&k| spectral_value(pot, packet, k))
        .collect::<Result<Vec<_>>>()?;
    let max_order = 4;
    Ok(SpectralAmplitude {
        ks: ks.to_vec(),
        values,
        derivatives_at_zero: [
            derivatives_at_zero(pot, packet, Side::Pos, max_order)?,
            derivatives_at_zero(pot, packet, Side::Neg, max_order)?,
        ],
        vanishing_order: vanishing_order(pot, packet, max_order)?,
    })
}

/// psi_tilde(k) by direct projection integral of phi*(y, k) against
/// psi(y, 0) — the slow, assumption-free route used to validate the closed
/// form above.
pub fn spectral_by_projection(
    pot: &PotentialSpec,
    packet: &PacketSpec,
    k: f64,
) -> Result<Complex64> {
    let lo = packet.x0 - 12.0 * packet.a0;
    let hi = packet.x0 + 12.0 * packet.a0;
    let mut f = |y: f64| {
        let phi = pot
            .scattering_state(k, std::slice::from_ref(&y))
            .expect("k != 0")[0];
        phi.conj() * packet.position_amplitude(y)
    };
    if k == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let (v, _) = adaptive_gauss_c(&mut f, lo, hi, 1e-12);
    Ok(v)
}

/// L2 norm of psi_tilde over all momenta; equals the packet norm (one) by
/// completeness of the scattering states for a repulsive barrier.
pub fn spectral_norm(pot: &PotentialSpec, packet: &PacketSpec) -> Result<f64> {
    let span = 9.5 / packet.a0;
    let lo = (packet.k0 - span).min(-span);
    let hi = (packet.k0 + span).max(span);
    // |psi_tilde|^2 has a kink at k = 0 (different branches), so integrate
    // each side separately.
    let mut f = |k: f64| {
        spectral_value(pot, packet, k)
            .map(|v| v.norm_sqr())
            .unwrap_or(0.0)
    };
    let (neg, _) = adaptive_gauss_r(&mut f, lo, 0.0, 5e-13);
    let (pos, _) = adaptive_gauss_r(&mut f, 0.0, hi, 5e-13);
    Ok((neg + pos).sqrt())
}
