//! Initial wave packets with a tunable zero at k = 0.
//!
//! The family is psi_hat_m(k) = N_m k^m exp(-a0^2 (k-k0)^2 / 2 - i k x0):
//! a Gaussian of momentum width 1/a0 centred at k0 and launched from x0,
//! multiplied by k^m to force an order-m zero at k = 0. The power m is the
//! knob that selects the long-time decay law of the nonescape probability.

use num_complex::Complex64;

use crate::numerics::binomial;
use crate::{Error, Result};

/// Packet parameters; `norm` makes the momentum amplitude unit-L2.
#[derive(Clone, Copy, Debug)]
pub struct PacketSpec {
    pub m: u32,
    pub a0: f64,
    pub k0: f64,
    pub x0: f64,
    pub norm: f64,
}

impl PacketSpec {
    pub fn new(m: u32, a0: f64, k0: f64, x0: f64) -> Result<Self> {
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::InvalidPacket(format!(
                "width parameter a0 must be positive and finite, got {a0}"
            )));
        }
        if !k0.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidPacket(format!(
                "k0 and x0 must be finite, got k0 = {k0}, x0 = {x0}"
            )));
        }
        if m > 8 {
            return Err(Error::InvalidPacket(format!(
                "momentum power m = {m} is outside the supported range 0..=8"
            )));
        }
        let norm = 1.0 / moment_integral(m, a0, k0).sqrt();
        Ok(Self { m, a0, k0, x0, norm })
    }

    /// The reference configuration: a0 = 1, k0 = 1, x0 = -20.
    pub fn standard(m: u32) -> Self {
        Self::new(m, 1.0, 1.0, -20.0).expect("standard parameters are valid")
    }

    /// psi_hat(k): the momentum-space amplitude.
    pub fn momentum_amplitude(&self, k: f64) -> Complex64 {
        let u = k - self.k0;
        let gauss = (-0.5 * self.a0 * self.a0 * u * u).exp();
        let phase = Complex64::from_polar(1.0, -k * self.x0);
        self.norm * k.powi(self.m as i32) * gauss * phase
    }

    /// psi_hat^{(l)}(0) for l = 0..=max_order. With psi_hat = N k^m h(k),
    /// h(k) = exp(-a0^2(k-k0)^2/2 - i k x0), the Taylor coefficients c_j of h
    /// obey (j+1) c_{j+1} = b c_j - a0^2 c_{j-1}, b = a0^2 k0 - i x0, so
    /// psi_hat^{(l)}(0) = N l! c_{l-m} (exactly zero for l < m).
    pub fn momentum_derivatives_at_zero(&self, max_order: u32) -> Vec<Complex64> {
        let b = Complex64::new(self.a0 * self.a0 * self.k0, -self.x0);
        let a2 = self.a0 * self.a0;
        let n = max_order as usize;
        let mut c = vec![Complex64::new(0.0, 0.0); n + 2];
        c[0] = Complex64::new((-0.5 * a2 * self.k0 * self.k0).exp(), 0.0);
        for j in 0..n + 1 {
            let prev = if j >= 1 { c[j - 1] } else { Complex64::new(0.0, 0.0) };
            c[j + 1] = (b * c[j] - a2 * prev) / (j + 1) as f64;
        }
        let mut fact = 1.0;
        (0..=n)
            .map(|l| {
                if l >= 1 {
                    fact *= l as f64;
                }
                if l < self.m as usize {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.norm * fact * c[l - self.m as usize]
                }
            })
            .collect()
    }

    /// Freely evolved packet psi(x, t) with V = 0, in closed form: the
    /// Gaussian integral over e^{-i t k^2} psi_hat(k) e^{ikx} reduces to
    /// moments M_m of a shifted Gaussian with alpha = a0^2/2 + i t.
    pub fn free_evolution(&self, x: f64, t: f64) -> Complex64 {
        let alpha = Complex64::new(0.5 * self.a0 * self.a0, t);
        let beta = Complex64::new(self.a0 * self.a0 * self.k0, x - self.x0);
        let gamma = 0.5 * self.a0 * self.a0 * self.k0 * self.k0;
        let mut m_prev = Complex64::new(0.0, 0.0);
        let mut m_cur = (std::f64::consts::PI / alpha).sqrt() * (beta * beta / (4.0 * alpha)).exp();
        for j in 1..=self.m as usize {
            let next = beta / (2.0 * alpha) * m_cur + (j as f64 - 1.0) / (2.0 * alpha) * m_prev;
            m_prev = m_cur;
            m_cur = next;
        }
        self.norm / (2.0 * std::f64::consts::PI).sqrt() * (-gamma).exp() * m_cur
    }

    /// psi(x, 0): the initial position-space amplitude.
    pub fn position_amplitude(&self, x: f64) -> Complex64 {
        self.free_evolution(x, 0.0)
    }

    /// Probability carried outside [a, b] at t = 0. The packet is not
    /// compactly supported, so this measures how well "initially inside the
    /// interval" holds.
    pub fn support_violation(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!(
                "interval [{a}, {b}] is empty"
            )));
        }
        let (inside, _) = crate::numerics::adaptive_gauss_r(
            &mut |x| self.position_amplitude(x).norm_sqr(),
            a,
            b,
            1e-12,
        );
        Ok((1.0 - inside).max(0.0))
    }

    /// <k^2>: mean kinetic energy of the packet (2M = 1).
    pub fn mean_kinetic_energy(&self) -> f64 {
        self.norm * self.norm * moment_integral(self.m + 1, self.a0, self.k0)
    }
}

// integral of k^{2m} e^{-a0^2 (k-k0)^2} dk: expand around k0 and use central
// Gaussian moments <u^{2j}> = (2j-1)!! sqrt(pi)/a0 / (2 a0^2)^j.
fn moment_integral(m: u32, a0: f64, k0: f64) -> f64 {
    let base = std::f64::consts::PI.sqrt() / a0;
    let mut total = 0.0;
    let mut central = base; // <u^0>
    for j in 0..=m {
        if j > 0 {
            central *= (2.0 * j as f64 - 1.0) / (2.0 * a0 * a0);
        }
        total += binomial(2 * m as usize, 2 * j as usize) * k0.powi(2 * (m - j) as i32) * central;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_c_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn normalization_constants() {
        // 1/N^2 = sqrt(pi) {1, 1.5, 4.75} for m = 0, 1, 2 at a0 = k0 = 1.
        assert_close(PacketSpec::standard(0).norm, 0.75112554446494248, 1e-15);
        assert_close(PacketSpec::standard(1).norm, 0.61329143890310219, 1e-15);
        assert_close(PacketSpec::standard(2).norm, 0.34464003602470011, 1e-15);
        // k0 = 0 keeps only the central moment: 1/N^2 = (3/4) sqrt(pi).
        let p = PacketSpec::new(2, 1.0, 0.0, 0.0).unwrap();
        assert_close(p.norm, 0.86732507058407752, 1e-15);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(PacketSpec::new(0, 0.0, 1.0, 0.0).is_err());
        assert!(PacketSpec::new(0, -1.0, 1.0, 0.0).is_err());
        assert!(PacketSpec::new(0, 1.0, f64::NAN, 0.0).is_err());
        assert!(PacketSpec::new(9, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn momentum_amplitude_spot_values() {
        let p0 = PacketSpec::standard(0);
        assert_c_close(
            p0.momentum_amplitude(0.5),
            Complex64::new(-0.55619196003563172, -0.36061307943479345),
            1e-15,
        );
        let p2 = PacketSpec::standard(2);
        assert_c_close(
            p2.momentum_amplitude(0.5),
            Complex64::new(-0.063799593342240306, -0.041365157130928162),
            1e-15,
        );
        // k^m zero at the origin.
        assert_eq!(p2.momentum_amplitude(0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn momentum_norm_is_one() {
        for m in 0..=2 {
            let p = PacketSpec::standard(m);
            let (n2, _) = crate::numerics::adaptive_gauss_r(
                &mut |k| p.momentum_amplitude(k).norm_sqr(),
                -12.0,
                14.0,
                1e-13,
            );
            assert_close(n2, 1.0, 1e-12);
        }
    }

    #[test]
    fn derivative_table_matches_series() {
        let p0 = PacketSpec::standard(0);
        let d = p0.momentum_derivatives_at_zero(5);
        assert_c_close(d[0], Complex64::new(0.45558067201133253, 0.0), 1e-15);
        assert_c_close(d[1], Complex64::new(0.45558067201133253, 9.1116134402266507), 1e-13);
        assert_c_close(d[2], Complex64::new(-182.23226880453301, 18.223226880453301), 1e-11);
        assert_c_close(d[3], Complex64::new(-547.60796775762171, -3644.6453760906603), 3e-10);
        assert_c_close(d[5], Complex64::new(368111.91646918876, 1457767.0343018618), 2e-7);
        let p1 = PacketSpec::standard(1);
        let d = p1.momentum_derivatives_at_zero(3);
        assert_eq!(d[0], Complex64::new(0.0, 0.0));
        assert_c_close(d[1], Complex64::new(0.37198006103400879, 0.0), 1e-15);
        assert_c_close(d[3], Complex64::new(-446.37607324081054, 44.637607324081054), 1e-10);
        let p2 = PacketSpec::standard(2);
        let d = p2.momentum_derivatives_at_zero(4);
        assert_eq!(d[0], Complex64::new(0.0, 0.0));
        assert_eq!(d[1], Complex64::new(0.0, 0.0));
        assert_c_close(d[2], Complex64::new(0.41806949682689421, 0.0), 1e-15);
        assert_c_close(d[4], Complex64::new(-1003.3667923845461, 100.33667923845461), 1e-9);
    }

    #[test]
    fn free_evolution_spot_values() {
        let expect = [
            Complex64::new(-0.10262228361094045, -0.21355942662965275),
            Complex64::new(-0.08379074369532829, -0.17437054166799704),
            Complex64::new(-0.057254295237069664, -0.09429594809171259),
        ];
        for m in 0..=2u32 {
            let p = PacketSpec::standard(m);
            assert_c_close(p.free_evolution(-10.0, 5.0), expect[m as usize], 1e-14);
        }
    }

    #[test]
    fn position_norm_is_one() {
        for m in 0..=2 {
            let p = PacketSpec::standard(m);
            let (n2, _) = crate::numerics::adaptive_gauss_r(
                &mut |x| p.position_amplitude(x).norm_sqr(),
                -45.0,
                5.0,
                1e-13,
            );
            assert_close(n2, 1.0, 1e-11);
        }
    }

    #[test]
    fn free_evolution_preserves_norm() {
        let p = PacketSpec::standard(1);
        let t = 3.0;
        // at t = 3 the packet has drifted by roughly 2 k0 t = 6 and spread
        let (n2, _) = crate::numerics::adaptive_gauss_r(
            &mut |x| p.free_evolution(x, t).norm_sqr(),
            -80.0,
            60.0,
            1e-13,
        );
        assert_close(n2, 1.0, 1e-10);
    }

    #[test]
    fn support_violation_against_reference() {
        let expect = [4.6777349810472658e-3, 0.018455725217108636, 0.028607928548943327];
        for m in 0..=2u32 {
            let p = PacketSpec::standard(m);
            let v = p.support_violation(-22.0, -18.0).unwrap();
            assert_close(v, expect[m as usize], 1e-11);
        }
        assert!(PacketSpec::standard(0).support_violation(3.0, 3.0).is_err());
    }

    #[test]
    fn mean_kinetic_energy_values() {
        assert_close(PacketSpec::standard(0).mean_kinetic_energy(), 1.5, 1e-14);
        assert_close(
            PacketSpec::standard(1).mean_kinetic_energy(),
            3.1666666666666667,
            1e-14,
        );
        assert_close(
            PacketSpec::standard(2).mean_kinetic_energy(),
            4.5526315789473684,
            1e-14,
        );
    }
}
