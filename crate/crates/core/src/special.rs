//! Special functions needed by the coverage and rate integrals.
//!
//! Only the real, non-positive argument branch of the Gauss hypergeometric
//! function is supported. That is the only branch the interference kernel
//! [`rho`] ever touches: it evaluates `2F1(1, 1 - 2/α; 2 - 2/α; -T)` for
//! `T ≥ 0`.
//!
//! Three evaluation routes cover `z ≤ 0`:
//!
//! * `z ∈ [-1/2, 0]`: the defining power series.
//! * `z < -1/2`: the Pfaff transformation
//!   `2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))`, which maps the
//!   argument into `(1/3, 1)` where the series converges.
//! * `z < -4` within the kernel family `a = 1, c = b + 1, 0 < b < 1`: an
//!   expansion in powers of `1/z`. The Pfaff series converges too slowly
//!   once `z/(z-1)` crowds 1, and the rate integrals reach `T ≈ 2^64`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const SERIES_EPS: f64 = 1e-16;
const MAX_SERIES_TERMS: usize = 200_000;

/// Lanczos sum `A(x)` and the shifted base `t = x + g + 1/2`, for `x ≥ 1/2`
/// written as `Γ(x) = √(2π) t^{x-1/2} e^{-t} A(x)`.
fn lanczos(x: f64) -> (f64, f64) {
    let xm1 = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (xm1 + k as f64);
    }
    (sum, xm1 + LANCZOS_G + 0.5)
}

/// The Gamma function for positive real arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "gamma",
            value: x,
            requirement: "x > 0",
        });
    }
    if x < 0.5 {
        return Ok(gamma(x + 1.0)? / x);
    }
    let (sum, t) = lanczos(x);
    // split the power so t^(x-1/2) does not overflow before e^{-t} tames it
    let half = t.powf(0.5 * (x - 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * sum)
}

/// Natural logarithm of the Gamma function for positive real arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "ln_gamma",
            value: x,
            requirement: "x > 0",
        });
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let (sum, t) = lanczos(x);
    Ok(0.5 * (2.0 * PI).ln() + (x - 0.5) * t.ln() - t + sum.ln())
}

/// Parameters of `2F1(a, b; c; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Args {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl Hyp2F1Args {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        Self { a, b, c, z }
    }

    /// `a = 1, c = b + 1` with `0 < b < 1`: the family of the interference
    /// kernel, where `2F1 = b ∫₀¹ s^{b-1} / (1 - z s) ds`.
    fn is_kernel_family(&self) -> bool {
        self.a == 1.0 && (self.c - self.b - 1.0).abs() < 1e-15 && self.b > 0.0 && self.b < 1.0
    }
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for real `z ≤ 0`.
pub fn hyp2f1(args: Hyp2F1Args) -> Result<f64> {
    let Hyp2F1Args { a, b, c, z } = args;
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::UnsupportedDomain(format!(
            "non-finite parameter in 2F1({a}, {b}; {c}; {z})"
        )));
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::UnsupportedDomain(format!(
            "c = {c} is zero or a negative integer"
        )));
    }
    if z > 0.0 {
        return Err(Error::UnsupportedDomain(format!(
            "z = {z} > 0; only the z ≤ 0 branch is implemented"
        )));
    }
    if z >= -0.5 {
        hyp2f1_series(a, b, c, z)
    } else if z < -4.0 && args.is_kernel_family() {
        Ok(kernel_family_large_argument(b, -z))
    } else {
        hyp2f1_pfaff(a, b, c, z)
    }
}

/// Direct summation of the defining series; requires `|z| < 1`.
pub(crate) fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if z.abs() >= 1.0 {
        return Err(Error::UnsupportedDomain(format!(
            "power series needs |z| < 1, got z = {z}"
        )));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if term.abs() <= SERIES_EPS * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::UnsupportedDomain(format!(
        "series for 2F1({a}, {b}; {c}; {z}) did not converge in {MAX_SERIES_TERMS} terms"
    )))
}

/// Pfaff transformation onto `w = z/(z-1) ∈ [0, 1)`; requires `z ≤ 0`.
pub(crate) fn hyp2f1_pfaff(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = z / (z - 1.0);
    Ok((1.0 - z).powf(-a) * hyp2f1_series(a, c - b, c, w)?)
}

/// `2F1(1, b; b+1; -t)` for `t > 1` from
/// `b t^{-b} [π / sin(πb) - Σ_k (-1)^k t^{b-1-k} / (k + 1 - b)]`.
fn kernel_family_large_argument(b: f64, t: f64) -> f64 {
    let lead = b * PI / (PI * b).sin() * t.powf(-b);
    let inv = 1.0 / t;
    let mut power = inv;
    let mut tail = 0.0;
    for k in 0..MAX_SERIES_TERMS {
        let term = power / (k as f64 + 1.0 - b);
        let signed = if k % 2 == 0 { term } else { -term };
        tail += signed;
        if term <= SERIES_EPS * tail.abs() {
            break;
        }
        power *= inv;
    }
    lead - b * tail
}

/// Interference kernel `ρ(T, α) = 2T/(α-2) · 2F1(1, 1-2/α; 2-2/α; -T)`.
///
/// `T` is a linear SINR threshold and `α > 2` the path-loss exponent.
pub fn rho(threshold: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::Domain {
            function: "rho",
            value: alpha,
            requirement: "alpha > 2",
        });
    }
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::Domain {
            function: "rho",
            value: threshold,
            requirement: "0 <= T < inf",
        });
    }
    if threshold == 0.0 {
        return Ok(0.0);
    }
    let b = 1.0 - 2.0 / alpha;
    let f = hyp2f1(Hyp2F1Args::new(1.0, b, b + 1.0, -threshold))?;
    Ok(2.0 * threshold / (alpha - 2.0) * f)
}
