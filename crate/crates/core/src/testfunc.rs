//! Test-function workshop: profiles `h` on [-1, 1], the window function
//! `phi` built from `g = f * f` with `f(y) = h(2y/sigma)`, the ratio
//! `phihat(0)/phi(0)`, the functional `C(h)`, and the Fejer function `psi`.
//!
//! All Fourier transforms use the kernel `exp(-2 pi i x y)`.

use crate::quad;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Anything the density engine can average against: an even function with
/// a compactly supported Fourier transform.
pub trait TestFunction: Sync {
    /// Half-width sigma of the open support of the transform.
    fn support(&self) -> f64;
    fn phi_at(&self, x: f64) -> f64;
    /// The transform; identically zero for |y| >= sigma.
    fn phihat_at(&self, y: f64) -> f64;
    fn phi0(&self) -> f64 {
        self.phi_at(0.0)
    }
    fn phihat0(&self) -> f64 {
        self.phihat_at(0.0)
    }
}

/// Profile of the window construction: an even, twice continuously
/// differentiable function supported on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctionH {
    /// `h(x) = (1 - x^2) q(x^2)` with exact rational `q` (ascending).
    EvenPolynomial { q: Vec<BigRational> },
    /// `h(x) = exp(-a / (1 - x^2))` on (-1, 1), zero outside.
    Bump { a: BigRational },
}

impl TestFunctionH {
    /// `h(x) = 1 - x^2`.
    pub fn parabola() -> Self {
        TestFunctionH::EvenPolynomial { q: vec![BigRational::one()] }
    }

    /// `h(x) = (1 - x^2) (q0 + q1 x^2 + ...)`.
    pub fn poly_from_q(q: Vec<BigRational>) -> Result<Self> {
        if q.iter().all(|c| c.is_zero()) {
            return Err(Error::DegenerateTestFunction("zero polynomial".into()));
        }
        Ok(TestFunctionH::EvenPolynomial { q })
    }

    /// The n = 2 family member `(1 - x^2)(1 + a2 x^2 + a4 x^4)` and its
    /// generalizations, with f64 coefficients converted exactly.
    pub fn poly_from_f64(coeffs: &[f64]) -> Result<Self> {
        let mut q = vec![BigRational::one()];
        for &c in coeffs {
            let r = BigRational::from_f64(c)
                .ok_or_else(|| Error::DegenerateTestFunction(format!("non-finite coefficient {c}")))?;
            q.push(r);
        }
        Self::poly_from_q(q)
    }

    pub fn bump(a: BigRational) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::DegenerateTestFunction("bump parameter must be positive".into()));
        }
        Ok(TestFunctionH::Bump { a })
    }

    /// Coefficients c_k of `h(x) = sum c_k x^{2k}` for the polynomial kind.
    pub fn even_coeffs(&self) -> Option<Vec<BigRational>> {
        match self {
            TestFunctionH::EvenPolynomial { q } => {
                // (1 - x^2) q(x^2): c_0 = q_0, c_k = q_k - q_{k-1}, c_{m+1} = -q_m
                let mut c = vec![BigRational::zero(); q.len() + 1];
                for (k, qk) in q.iter().enumerate() {
                    c[k] += qk;
                    c[k + 1] -= qk;
                }
                Some(c)
            }
            TestFunctionH::Bump { .. } => None,
        }
    }

    pub fn h_at(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            TestFunctionH::EvenPolynomial { .. } => {
                let c = self.even_coeffs_f64();
                even_poly_eval(&c, x)
            }
            TestFunctionH::Bump { a } => {
                let a = a.to_f64().unwrap();
                (-a / (1.0 - x * x)).exp()
            }
        }
    }

    /// Second derivative, analytic for both kinds.
    pub fn h2_at(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            TestFunctionH::EvenPolynomial { .. } => {
                let c = self.even_coeffs_f64();
                let d2 = even_poly_second_derivative(&c);
                even_poly_eval(&d2, x)
            }
            TestFunctionH::Bump { a } => {
                let a = a.to_f64().unwrap();
                let u = 1.0 - x * x;
                let h = (-a / u).exp();
                h * (-2.0 * a / (u * u) - 8.0 * a * x * x / (u * u * u)
                    + 4.0 * a * a * x * x / (u * u * u * u))
            }
        }
    }

    pub(crate) fn even_coeffs_f64(&self) -> Vec<f64> {
        self.even_coeffs()
            .map(|c| c.iter().map(|r| r.to_f64().unwrap()).collect())
            .unwrap_or_default()
    }

    /// Grid check of the monotone-decreasing hypothesis on [0, 1].
    pub fn is_monotone_decreasing_on_unit(&self) -> bool {
        let n = 1000;
        let mut prev = self.h_at(0.0);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            let v = self.h_at(x);
            if v > prev + 1e-12 {
                return false;
            }
            prev = v;
        }
        true
    }
}

fn even_poly_eval(c: &[f64], x: f64) -> f64 {
    let t = x * x;
    let mut acc = 0.0;
    for ck in c.iter().rev() {
        acc = acc * t + ck;
    }
    acc
}

/// Coefficients of h'' for h given by even coefficients c_k x^{2k}.
fn even_poly_second_derivative(c: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; c.len().saturating_sub(1)];
    for (k, ck) in c.iter().enumerate().skip(1) {
        d[k - 1] = ck * (2 * k) as f64 * (2 * k - 1) as f64;
    }
    d
}

/// The three profile integrals `(I1, I2, I3) = (int h, int h^2, int h h'')`
/// over [0, 1]; exact rationals for polynomial profiles.
#[derive(Debug, Clone)]
pub struct HIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub exact: Option<[BigRational; 3]>,
}

fn rat_poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Integrate `sum c_k x^{2k}` over [0, 1] exactly.
fn rat_even_integral(c: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for (k, ck) in c.iter().enumerate() {
        acc += ck / BigRational::from_integer(BigInt::from(2 * k as i64 + 1));
    }
    acc
}

pub fn h_integrals(h: &TestFunctionH) -> Result<HIntegrals> {
    match h {
        TestFunctionH::EvenPolynomial { .. } => {
            let c = h.even_coeffs().unwrap();
            let i1 = rat_even_integral(&c);
            let i2 = rat_even_integral(&rat_poly_mul(&c, &c));
            // h'' coefficients: c_k 2k(2k-1) x^{2k-2}
            let mut d = vec![BigRational::zero(); c.len().saturating_sub(1)];
            for (k, ck) in c.iter().enumerate().skip(1) {
                d[k - 1] = ck * BigRational::from_integer(BigInt::from((2 * k * (2 * k - 1)) as i64));
            }
            let i3 = rat_even_integral(&rat_poly_mul(&c, &d));
            Ok(HIntegrals {
                i1: i1.to_f64().unwrap(),
                i2: i2.to_f64().unwrap(),
                i3: i3.to_f64().unwrap(),
                exact: Some([i1, i2, i3]),
            })
        }
        TestFunctionH::Bump { .. } => {
            let tol = quad::DEFAULT_TOL;
            let i1 = quad::adaptive(|x| h.h_at(x), 0.0, 1.0, tol)?;
            let i2 = quad::adaptive(|x| h.h_at(x) * h.h_at(x), 0.0, 1.0, tol)?;
            let i3 = quad::adaptive(|x| h.h_at(x) * h.h2_at(x), 0.0, 1.0, tol)?;
            Ok(HIntegrals { i1, i2, i3, exact: None })
        }
    }
}

/// `C(h) = sqrt(-I2 / I3)`; rejects profiles with `I3 >= 0`.
pub fn c_of_h(h: &TestFunctionH) -> Result<f64> {
    let ints = h_integrals(h)?;
    if ints.i3 >= 0.0 {
        return Err(Error::DegenerateTestFunction(format!(
            "int h h'' = {} is not negative",
            ints.i3
        )));
    }
    Ok((-ints.i2 / ints.i3).sqrt())
}

/// Closed form of `phihat(0)/phi(0)`:
/// `[I2 + (1/(sigma tau pi))^2 I3] / (sigma I1^2)`.
pub fn ratio_phihat0_phi0(h: &TestFunctionH, sigma: f64, tau: f64) -> Result<f64> {
    if sigma <= 0.0 || tau <= 0.0 {
        return Err(Error::InvalidConfig("sigma and tau must be positive".into()));
    }
    let ints = h_integrals(h)?;
    if ints.i1 == 0.0 {
        return Err(Error::DegenerateTestFunction("int h = 0".into()));
    }
    let k = 1.0 / (sigma * tau * std::f64::consts::PI);
    Ok((ints.i2 + k * k * ints.i3) / (sigma * ints.i1 * ints.i1))
}

/// The window function of the lower bound: `phi(x) = fhat(x)^2 (1 - (x/tau)^2)`
/// with `phihat(y) = g(y) + (2 pi tau)^{-2} g''(y)` supported in
/// (-sigma, sigma), where `f(y) = h(2y/sigma)` and `g = f * f`.
#[derive(Debug, Clone)]
pub struct TestFunctionPhi {
    h: TestFunctionH,
    sigma: f64,
    tau: f64,
    even_coeffs: Vec<f64>, // empty for bump profiles
}

pub fn build_phi(h: &TestFunctionH, sigma: f64, tau: f64) -> Result<TestFunctionPhi> {
    if sigma <= 0.0 || tau <= 0.0 {
        return Err(Error::InvalidConfig("sigma and tau must be positive".into()));
    }
    Ok(TestFunctionPhi {
        even_coeffs: h.even_coeffs_f64(),
        h: h.clone(),
        sigma,
        tau,
    })
}

impl TestFunctionPhi {
    pub fn h(&self) -> &TestFunctionH {
        &self.h
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `fhat(x) = sigma int_0^1 h(u) cos(pi sigma x u) du`.
    pub fn fhat_at(&self, x: f64) -> f64 {
        let alpha = std::f64::consts::PI * self.sigma * x;
        if !self.even_coeffs.is_empty() {
            let moments = cosine_moments(alpha, 2 * (self.even_coeffs.len() - 1));
            let mut acc = 0.0;
            for (k, c) in self.even_coeffs.iter().enumerate() {
                acc += c * moments[2 * k];
            }
            self.sigma * acc
        } else {
            // Oscillation-aware panels keep the bump quadrature honest at
            // large |x|.
            let panels = 1 + (alpha.abs() / 2.0) as usize;
            let mut acc = 0.0;
            for i in 0..panels {
                let a = i as f64 / panels as f64;
                let b = (i + 1) as f64 / panels as f64;
                acc += quad::adaptive(
                    |u| self.h.h_at(u) * (alpha * u).cos(),
                    a,
                    b,
                    quad::DEFAULT_TOL / panels as f64,
                )
                .unwrap_or(f64::NAN);
            }
            self.sigma * acc
        }
    }

    fn f_at(&self, t: f64) -> f64 {
        self.h.h_at(2.0 * t / self.sigma)
    }

    fn f2_at(&self, t: f64) -> f64 {
        4.0 / (self.sigma * self.sigma) * self.h.h2_at(2.0 * t / self.sigma)
    }

    /// `g(y) = (f * f)(y)` by direct convolution quadrature.
    pub fn g_at(&self, y: f64) -> f64 {
        let y = y.abs();
        let half = self.sigma / 2.0;
        let lo = (y - half).max(-half);
        let hi = half.min(y + half);
        if lo >= hi {
            return 0.0;
        }
        quad::adaptive(|t| self.f_at(t) * self.f_at(y - t), lo, hi, quad::DEFAULT_TOL)
            .unwrap_or(f64::NAN)
    }

    /// `g''(y) = (f * f'')(y)`.
    pub fn g2_at(&self, y: f64) -> f64 {
        let y = y.abs();
        let half = self.sigma / 2.0;
        let lo = (y - half).max(-half);
        let hi = half.min(y + half);
        if lo >= hi {
            return 0.0;
        }
        quad::adaptive(|t| self.f_at(t) * self.f2_at(y - t), lo, hi, quad::DEFAULT_TOL)
            .unwrap_or(f64::NAN)
    }
}

impl TestFunction for TestFunctionPhi {
    fn support(&self) -> f64 {
        self.sigma
    }

    fn phi_at(&self, x: f64) -> f64 {
        let fh = self.fhat_at(x);
        fh * fh * (1.0 - (x / self.tau) * (x / self.tau))
    }

    fn phihat_at(&self, y: f64) -> f64 {
        if y.abs() >= self.sigma {
            return 0.0;
        }
        let w = 2.0 * std::f64::consts::PI * self.tau;
        self.g_at(y) + self.g2_at(y) / (w * w)
    }
}

/// `M_m(alpha) = int_0^1 u^m cos(alpha u) du` for m = 0..=mmax, by the
/// integration-by-parts recurrence, with a Maclaurin switch near alpha = 0
/// where the recurrence cancels catastrophically.
fn cosine_moments(alpha: f64, mmax: usize) -> Vec<f64> {
    let mut cos_m = vec![0.0; mmax + 1];
    if alpha.abs() < 0.5 {
        for m in 0..=mmax {
            // sum_j (-1)^j alpha^(2j) / (2j)! / (m + 2j + 1)
            let mut term = 1.0 / (m as f64 + 1.0);
            let mut acc = term;
            let mut j = 0usize;
            loop {
                j += 1;
                term *= -alpha * alpha / ((2 * j - 1) as f64 * (2 * j) as f64);
                let piece = term * (m as f64 + 1.0) / (m as f64 + 2.0 * j as f64 + 1.0);
                acc += piece;
                if piece.abs() < 1e-18 || j > 40 {
                    break;
                }
            }
            cos_m[m] = acc;
        }
        return cos_m;
    }
    let (s, c) = alpha.sin_cos();
    let mut sin_m = vec![0.0; mmax + 1];
    cos_m[0] = s / alpha;
    sin_m[0] = (1.0 - c) / alpha;
    for m in 1..=mmax {
        cos_m[m] = s / alpha - m as f64 / alpha * sin_m[m - 1];
        sin_m[m] = -c / alpha + m as f64 / alpha * cos_m[m - 1];
    }
    cos_m
}

/// The Fejer kernel profile `psi(x) = (sin(pi sigma x) / (pi sigma x))^2`
/// with triangular transform `(1/sigma)(1 - |y|/sigma)` on (-sigma, sigma).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerPsi {
    sigma: f64,
}

pub fn fejer(sigma: f64) -> Result<FejerPsi> {
    if sigma <= 0.0 {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    Ok(FejerPsi { sigma })
}

impl FejerPsi {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn psi_at(&self, x: f64) -> f64 {
        let s = std::f64::consts::PI * self.sigma * x;
        if s == 0.0 {
            return 1.0;
        }
        let r = s.sin() / s;
        r * r
    }

    pub fn psihat_at(&self, y: f64) -> f64 {
        if y.abs() >= self.sigma {
            0.0
        } else {
            (1.0 - y.abs() / self.sigma) / self.sigma
        }
    }

    pub fn psiprime_at(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let s = std::f64::consts::PI * self.sigma;
        2.0 * (s * x).sin() / (s * x * x) * ((s * x).cos() - (s * x).sin() / (s * x))
    }
}

impl TestFunction for FejerPsi {
    fn support(&self) -> f64 {
        self.sigma
    }

    fn phi_at(&self, x: f64) -> f64 {
        self.psi_at(x)
    }

    fn phihat_at(&self, y: f64) -> f64 {
        self.psihat_at(y)
    }
}

/// Serializable descriptor of a test function for reproducible runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiDescriptor {
    /// "even_polynomial", "bump", or "fejer".
    pub kind: String,
    /// q coefficients for the polynomial kind, as exact rational strings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<String>>,
    /// Bump parameter, as an exact rational string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    pub sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

/// Parse "3/4", "-0.25", or "7" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |_| Error::InvalidConfig(format!("cannot parse rational {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(bad)?;
        let d: BigInt = den.trim().parse().map_err(bad)?;
        if d.is_zero() {
            return Err(Error::InvalidConfig(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(bad)?
        };
        let frac_digits: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(bad)?
        };
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let mag = int_part.abs() * &scale + frac_digits;
        let signed = if neg { -mag } else { mag };
        return Ok(BigRational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(bad)?;
    Ok(BigRational::from_integer(n))
}

fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl TestFunctionPhi {
    pub fn to_descriptor(&self) -> PhiDescriptor {
        match &self.h {
            TestFunctionH::EvenPolynomial { q } => PhiDescriptor {
                kind: "even_polynomial".into(),
                coefficients: Some(q.iter().map(rational_string).collect()),
                parameter: None,
                sigma: self.sigma,
                tau: Some(self.tau),
            },
            TestFunctionH::Bump { a } => PhiDescriptor {
                kind: "bump".into(),
                coefficients: None,
                parameter: Some(rational_string(a)),
                sigma: self.sigma,
                tau: Some(self.tau),
            },
        }
    }
}

impl PhiDescriptor {
    pub fn to_h(&self) -> Result<TestFunctionH> {
        match self.kind.as_str() {
            "even_polynomial" => {
                let coeffs = self
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("missing coefficients".into()))?;
                let q = coeffs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                TestFunctionH::poly_from_q(q)
            }
            "bump" => {
                let p = self
                    .parameter
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("missing bump parameter".into()))?;
                TestFunctionH::bump(parse_rational(p)?)
            }
            other => Err(Error::InvalidConfig(format!("unknown test-function kind {other:?}"))),
        }
    }
}
