//! Quadrature rules, one-sided numerical differentiation and small helpers
//! shared by the physics modules.

use num_complex::Complex64;

/// Gauss-Legendre nodes/weights on [-1, 1], 8 points.
pub const GAUSS_8: [(f64, f64); 8] = [
    (-9.60289856497536176e-01, 1.01228536290376689e-01),
    (-7.96666477413626728e-01, 2.22381034453374343e-01),
    (-5.25532409916328991e-01, 3.13706645877887047e-01),
    (-1.83434642495649780e-01, 3.62683783378361768e-01),
    (1.83434642495649780e-01, 3.62683783378361768e-01),
    (5.25532409916328991e-01, 3.13706645877887047e-01),
    (7.96666477413626728e-01, 2.22381034453374343e-01),
    (9.60289856497536176e-01, 1.01228536290376689e-01),
];

/// Gauss-Legendre nodes/weights on [-1, 1], 16 points.
pub const GAUSS_16: [(f64, f64); 16] = [
    (-9.89400934991649939e-01, 2.71524594117540374e-02),
    (-9.44575023073232600e-01, 6.22535239386477063e-02),
    (-8.65631202387831755e-01, 9.51585116824925914e-02),
    (-7.55404408355002999e-01, 1.24628971255534030e-01),
    (-6.17876244402643771e-01, 1.49595988816576764e-01),
    (-4.58016777657227370e-01, 1.69156519395002619e-01),
    (-2.81603550779258915e-01, 1.82603415044923612e-01),
    (-9.50125098376374544e-02, 1.89450610455068585e-01),
    (9.50125098376374544e-02, 1.89450610455068585e-01),
    (2.81603550779258915e-01, 1.82603415044923612e-01),
    (4.58016777657227370e-01, 1.69156519395002619e-01),
    (6.17876244402643771e-01, 1.49595988816576764e-01),
    (7.55404408355002999e-01, 1.24628971255534030e-01),
    (8.65631202387831755e-01, 9.51585116824925914e-02),
    (9.44575023073232600e-01, 6.22535239386477063e-02),
    (9.89400934991649939e-01, 2.71524594117540374e-02),
];

/// Gauss-Legendre nodes/weights on [-1, 1], 32 points.
pub const GAUSS_32: [(f64, f64); 32] = [
    (-9.97263861849481570e-01, 7.01861000946929839e-03),
    (-9.85611511545268382e-01, 1.62743947309059653e-02),
    (-9.64762255587506390e-01, 2.53920653092624266e-02),
    (-9.34906075937739667e-01, 3.42738629130216257e-02),
    (-8.96321155766052202e-01, 4.28358980222264263e-02),
    (-8.49367613732569970e-01, 5.09980592623762441e-02),
    (-7.94483795967942386e-01, 5.86840934785357038e-02),
    (-7.32182118740289711e-01, 6.58222227763617523e-02),
    (-6.63044266930215231e-01, 7.23457941088484491e-02),
    (-5.87715757240762304e-01, 7.81938957870703111e-02),
    (-5.06899908932229359e-01, 8.33119242269468457e-02),
    (-4.21351276130635333e-01, 8.76520930044039082e-02),
    (-3.31868602282127667e-01, 9.11738786957638631e-02),
    (-2.39287362252137065e-01, 9.38443990808045664e-02),
    (-1.44471961582796488e-01, 9.56387200792748332e-02),
    (-4.83076656877383104e-02, 9.65400885147278121e-02),
    (4.83076656877383104e-02, 9.65400885147278121e-02),
    (1.44471961582796488e-01, 9.56387200792748332e-02),
    (2.39287362252137065e-01, 9.38443990808045664e-02),
    (3.31868602282127667e-01, 9.11738786957638631e-02),
    (4.21351276130635333e-01, 8.76520930044039082e-02),
    (5.06899908932229359e-01, 8.33119242269468457e-02),
    (5.87715757240762304e-01, 7.81938957870703111e-02),
    (6.63044266930215231e-01, 7.23457941088484491e-02),
    (7.32182118740289711e-01, 6.58222227763617523e-02),
    (7.94483795967942386e-01, 5.86840934785357038e-02),
    (8.49367613732569970e-01, 5.09980592623762441e-02),
    (8.96321155766052202e-01, 4.28358980222264263e-02),
    (9.34906075937739667e-01, 3.42738629130216257e-02),
    (9.64762255587506390e-01, 2.53920653092624266e-02),
    (9.85611511545268382e-01, 1.62743947309059653e-02),
    (9.97263861849481570e-01, 7.01861000946929839e-03),
];

/// Gauss-Legendre integral of a complex-valued function over [a, b].
pub fn gauss_c(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64, rule: &[(f64, f64)]) -> Complex64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for &(x, w) in rule {
        s += w * f(c + h * x);
    }
    h * s
}

/// Gauss-Legendre integral of a real-valued function over [a, b].
pub fn gauss_r(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for &(x, w) in rule {
        s += w * f(c + h * x);
    }
    h * s
}

/// Adaptive Gauss quadrature (16- vs 32-point comparison, bisection on
/// disagreement). Returns (integral, error estimate). `tol` is absolute.
pub fn adaptive_gauss_r(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut total = Kahan::new();
    let mut err = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = gauss_r(f, lo, hi, &GAUSS_16);
        let fine = gauss_r(f, lo, hi, &GAUSS_32);
        let diff = (fine - coarse).abs();
        let share = tol * (hi - lo) / (b - a);
        if diff <= share || depth >= 48 {
            total.add(fine);
            err += diff;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (total.value(), err)
}

/// Complex-valued counterpart of [`adaptive_gauss_r`].
pub fn adaptive_gauss_c(
    f: &mut impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> (Complex64, f64) {
    let mut total_re = Kahan::new();
    let mut total_im = Kahan::new();
    let mut err = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = gauss_c(f, lo, hi, &GAUSS_16);
        let fine = gauss_c(f, lo, hi, &GAUSS_32);
        let diff = (fine - coarse).norm();
        let share = tol * (hi - lo) / (b - a);
        if diff <= share || depth >= 48 {
            total_re.add(fine.re);
            total_im.add(fine.im);
            err += diff;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (Complex64::new(total_re.value(), total_im.value()), err)
}

/// Composite Simpson rule on uniformly spaced samples. With an even number
/// of intervals this is plain Simpson; an odd count gets a trapezoid patch
/// on the final interval.
pub fn simpson_uniform(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3, "simpson_uniform needs at least 3 samples");
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 2 };
    let mut s4 = Kahan::new();
    let mut s2 = Kahan::new();
    let mut i = 1;
    while i < simpson_end {
        s4.add(values[i]);
        i += 2;
    }
    let mut i = 2;
    while i < simpson_end {
        s2.add(values[i]);
        i += 2;
    }
    let mut out = dx / 3.0 * (values[0] + values[simpson_end] + 4.0 * s4.value() + 2.0 * s2.value());
    if intervals % 2 != 0 {
        out += 0.5 * dx * (values[n - 2] + values[n - 1]);
    }
    out
}

/// Simpson value plus an error estimate from comparing against the
/// half-resolution rule: |S(h) - S(2h)| / 15.
pub fn simpson_with_error(values: &[f64], dx: f64) -> (f64, f64) {
    let fine = simpson_uniform(values, dx);
    if values.len() >= 5 {
        let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
        let mut s2h = simpson_uniform(&coarse, 2.0 * dx);
        if values.len() % 2 == 0 {
            // The strided set drops the final sample; patch with a trapezoid.
            s2h += 0.5 * dx * (values[values.len() - 2] + values[values.len() - 1]);
        }
        (fine, (fine - s2h).abs() / 15.0)
    } else {
        (fine, f64::NAN)
    }
}

/// Compensated (Kahan) accumulator.
#[derive(Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Binomial coefficient as f64 (exact for the small orders used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Gamma(j + 1/2) for integer j >= 0: Gamma(1/2) = sqrt(pi), then the
/// recurrence Gamma(z+1) = z Gamma(z).
pub fn gamma_half(j: u32) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    for i in 0..j {
        g *= i as f64 + 0.5;
    }
    g
}

/// (it)^{-p} on the principal branch for t > 0: t^{-p} e^{-i pi p / 2}.
pub fn it_pow_neg(t: f64, p: f64) -> Complex64 {
    Complex64::from_polar(t.powf(-p), -std::f64::consts::FRAC_PI_2 * p)
}

/// One-sided derivative of the given order at 0 by forward differences on
/// nodes sign*h, sign*2h, ..., with Richardson extrapolation over the step
/// ladder h0, 2*h0, ..., h0*2^(levels-1).
///
/// The raw difference quotient carries an error series in integer powers of
/// (sign*h), so each extrapolation level cancels one more power. Returns the
/// extrapolated value and the difference between the last two table entries
/// as an error indicator.
pub fn one_sided_derivative(
    f: &mut impl FnMut(f64) -> Complex64,
    sign: f64,
    order: usize,
    h0: f64,
    levels: usize,
) -> (Complex64, f64) {
    assert!(levels >= 1);
    assert!(sign == 1.0 || sign == -1.0);
    // Row l holds the difference quotient at step h0 * 2^l.
    let mut table: Vec<Complex64> = (0..levels)
        .map(|l| {
            let h = sign * h0 * (1u64 << l) as f64;
            let mut d = Complex64::new(0.0, 0.0);
            for j in 0..=order {
                let c = binomial(order, j) * if (order - j) % 2 == 0 { 1.0 } else { -1.0 };
                d += c * f((j + 1) as f64 * h);
            }
            d / h.powi(order as i32)
        })
        .collect();
    let mut prev_best = table[0];
    for m in 1..levels {
        let factor = (1u64 << m) as f64; // 2^m
        for l in 0..levels - m {
            table[l] = (factor * table[l] - table[l + 1]) / (factor - 1.0);
        }
        if levels - m > 1 {
            prev_best = table[0];
        }
    }
    let err = if levels > 1 {
        (table[0] - prev_best).norm()
    } else {
        f64::NAN
    };
    (table[0], err)
}

/// Richardson limit of f(sign*h) as h -> 0+, same ladder as
/// [`one_sided_derivative`] with order 0.
pub fn one_sided_limit(
    f: &mut impl FnMut(f64) -> Complex64,
    sign: f64,
    h0: f64,
    levels: usize,
) -> (Complex64, f64) {
    one_sided_derivative(f, sign, 0, h0, levels)
}

/// n logarithmically spaced points spanning [a, b], a > 0.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// n uniformly spaced points spanning [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Number of coefficients kept in a [`Taylor`] expansion (degrees 0..=6).
pub const TAYLOR_LEN: usize = 7;

/// Taylor expansion truncated past degree six: fixed-size coefficient vector
/// whose arithmetic drops higher-order terms, so results are exact through
/// the retained degrees whenever the inputs are. Division requires a nonzero
/// constant term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Taylor(pub [Complex64; TAYLOR_LEN]);

impl Taylor {
    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0)
    }

    /// c x^n as an expansion.
    pub fn monomial(c: Complex64, n: usize) -> Self {
        let mut t = Self::default();
        t.0[n] = c;
        t
    }

    /// exp(a x); entire, so truncation is the only error.
    pub fn exp_linear(a: Complex64) -> Self {
        let mut t = Self::default();
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..TAYLOR_LEN {
            t.0[n] = term;
            term *= a / (n as f64 + 1.0);
        }
        t
    }

    pub fn coefficient(&self, n: usize) -> Complex64 {
        self.0[n]
    }

    /// d^n/dx^n at the expansion point: n! times the nth coefficient.
    pub fn derivative(&self, n: usize) -> Complex64 {
        self.0[n] * (1..=n).map(|j| j as f64).product::<f64>()
    }

    /// Coefficients with odd degrees negated, i.e. f(x) -> f(-x).
    pub fn reflect(mut self) -> Self {
        for n in (1..TAYLOR_LEN).step_by(2) {
            self.0[n] = -self.0[n];
        }
        self
    }
}

impl std::ops::Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        for n in 0..TAYLOR_LEN {
            self.0[n] = -self.0[n];
        }
        self
    }
}

impl std::ops::Add for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: Taylor) -> Taylor {
        for n in 0..TAYLOR_LEN {
            self.0[n] += rhs.0[n];
        }
        self
    }
}

impl std::ops::Sub for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: Taylor) -> Taylor {
        for n in 0..TAYLOR_LEN {
            self.0[n] -= rhs.0[n];
        }
        self
    }
}

impl std::ops::Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        let mut out = Taylor::default();
        for i in 0..TAYLOR_LEN {
            for j in 0..TAYLOR_LEN - i {
                out.0[i + j] += self.0[i] * rhs.0[j];
            }
        }
        out
    }
}

impl std::ops::Mul<Complex64> for Taylor {
    type Output = Taylor;
    fn mul(mut self, rhs: Complex64) -> Taylor {
        for n in 0..TAYLOR_LEN {
            self.0[n] *= rhs;
        }
        self
    }
}

impl std::ops::Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        assert!(
            rhs.0[0].norm() > 0.0,
            "series division needs a nonzero constant term"
        );
        let mut out = Taylor::default();
        for n in 0..TAYLOR_LEN {
            let mut c = self.0[n];
            for j in 1..=n {
                c -= rhs.0[j] * out.0[n - j];
            }
            out.0[n] = c / rhs.0[0];
        }
        out
    }
}
