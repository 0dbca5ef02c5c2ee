//! Log-gamma (real and complex), digamma and trigamma.
//!
//! All routines use an upward shift by the functional recurrence followed by
//! an asymptotic (Stirling / Bernoulli) series, which keeps every evaluation
//! in double precision with errors near machine epsilon.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Complex value used for characteristic-function arithmetic.
pub type ComplexValue = Complex64;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// B_{2k} / (2k (2k-1)) for k = 1..10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// Shift threshold for the asymptotic series of log-gamma.
const LGAMMA_SHIFT: f64 = 15.0;

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut y = x;
    let mut prod = 1.0;
    while y < LGAMMA_SHIFT {
        prod *= y;
        y += 1.0;
    }
    stirling_real(y) - prod.ln()
}

fn stirling_real(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// Principal branch of log Γ(z) for Re z > 0.
pub fn ln_gamma_complex(z: ComplexValue) -> Result<ComplexValue> {
    if !(z.re > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!(
            "ln_gamma_complex requires Re z > 0, got {z}"
        )));
    }
    Ok(ln_gamma_right_half(z))
}

fn ln_gamma_right_half(z: ComplexValue) -> ComplexValue {
    if z.im == 0.0 {
        return Complex64::new(ln_gamma_unchecked(z.re), 0.0);
    }
    let mut y = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while y.norm() < LGAMMA_SHIFT {
        shift += y.ln();
        y += 1.0;
    }
    stirling_complex(y) - shift
}

fn stirling_complex(z: ComplexValue) -> ComplexValue {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}

/// A logarithm of Γ(z) valid anywhere off the poles, determined only modulo
/// 2πi once the reflection formula is used (Re z < 1/2).
///
/// This is what contour-based inversion needs: the value is exponentiated
/// afterwards, so the branch is irrelevant.
pub fn ln_gamma_complex_reflected(z: ComplexValue) -> Result<ComplexValue> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.re >= 0.5 {
        return Ok(ln_gamma_right_half(z));
    }
    if z.im == 0.0 && z.re == z.re.round() {
        return Err(Error::Domain(format!("pole of Γ at {z}")));
    }
    // Γ(z) Γ(1-z) = π / sin(πz)
    let ln_sin = ln_sin_pi(z);
    Ok(Complex64::new(LN_PI, 0.0) - ln_sin - ln_gamma_right_half(1.0 - z))
}

/// log sin(πz) modulo 2πi, without overflow for large |Im z|.
fn ln_sin_pi(z: ComplexValue) -> ComplexValue {
    let w = z * PI;
    if w.im.abs() < 20.0 {
        return w.sin().ln();
    }
    let i = Complex64::new(0.0, 1.0);
    if w.im > 0.0 {
        // sin w = e^{-iw} (e^{2iw} - 1) / (2i), |e^{2iw}| < 1
        let e2 = (2.0 * i * w).exp();
        -i * w + (e2 - 1.0).ln() - (2.0 * i).ln()
    } else {
        // sin w = e^{iw} (1 - e^{-2iw}) / (2i), |e^{-2iw}| < 1
        let e2 = (-2.0 * i * w).exp();
        i * w + (1.0 - e2).ln() - (2.0 * i).ln()
    }
}

/// Shift threshold for the digamma / trigamma asymptotic series.
const POLY_SHIFT: f64 = 10.0;

/// Digamma Ψ(x) = d/dx log Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut terms = Vec::new();
    while y < POLY_SHIFT {
        terms.push(1.0 / y);
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let tail = inv2
        * (-1.0 / 12.0
            + inv2
                * (1.0 / 120.0
                    + inv2
                        * (-1.0 / 252.0
                            + inv2
                                * (1.0 / 240.0
                                    + inv2
                                        * (-1.0 / 132.0
                                            + inv2 * (691.0 / 32760.0 + inv2 * (-1.0 / 12.0)))))));
    let asym = y.ln() - 0.5 / y + tail;
    let shift: f64 = terms.iter().rev().sum();
    asym - shift
}

/// Trigamma Ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("trigamma requires x > 0, got {x}")));
    }
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut terms = Vec::new();
    while y < POLY_SHIFT {
        terms.push(1.0 / (y * y));
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let tail = inv
        * inv2
        * (1.0 / 6.0
            + inv2
                * (-1.0 / 30.0
                    + inv2
                        * (1.0 / 42.0
                            + inv2
                                * (-1.0 / 30.0
                                    + inv2
                                        * (5.0 / 66.0
                                            + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
    let asym = inv + 0.5 * inv2 + tail;
    let shift: f64 = terms.iter().rev().sum();
    asym + shift
}

/// log B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!((ln_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!((ln_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(1e-3).unwrap() - 6.907_178_885_383_853).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_factorials_relative() {
        let mut lf = 0.0f64; // ln 1!
        for k in 2..=170u32 {
            lf += (k as f64).ln();
            let got = ln_gamma(k as f64 + 1.0).unwrap();
            assert!(((got - lf) / lf).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(trigamma(-2.0), Err(Error::Domain(_))));
        assert!(ln_gamma_complex(Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn complex_real_axis_agrees() {
        for &x in &[0.1, 0.5, 1.0, 3.0, 7.25, 40.0, 1e4] {
            let c = ln_gamma_complex(Complex64::new(x, 0.0)).unwrap();
            assert!((c.re - ln_gamma(x).unwrap()).abs() < 1e-12);
            assert_eq!(c.im, 0.0);
        }
        let z3 = ln_gamma_complex(Complex64::new(3.0, 0.0)).unwrap();
        assert!((z3.re - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn complex_near_real_axis_continuous() {
        let a = ln_gamma_complex(Complex64::new(2.5, 1e-9)).unwrap();
        assert!((a.re - ln_gamma(2.5).unwrap()).abs() < 1e-12);
        assert!(a.im.abs() < 1e-8);
    }

    #[test]
    fn reflection_matches_recurrence() {
        // Γ(z+1) = z Γ(z) across the reflection boundary.
        for &(re, im) in &[(-0.3, 0.7), (-3.6, 2.0), (0.2, -5.0), (-40.25, 300.0)] {
            let z = Complex64::new(re, im);
            let lhs = ln_gamma_complex_reflected(z + 1.0).unwrap();
            let rhs = ln_gamma_complex_reflected(z).unwrap() + z.ln();
            let d = (lhs - rhs).exp();
            assert!((d - 1.0).norm() < 1e-10, "z={z} d={d}");
        }
    }

    #[test]
    fn reflection_pole_is_error() {
        assert!(ln_gamma_complex_reflected(Complex64::new(-2.0, 0.0)).is_err());
    }

    #[test]
    fn trigamma_at_one() {
        assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-13);
    }

    #[test]
    fn digamma_recurrence_example() {
        let d = digamma(4.5).unwrap() - digamma(3.5).unwrap();
        assert!((d - 1.0 / 3.5).abs() < 1e-14);
    }

    #[test]
    fn digamma_at_one_vs_series_euler_gamma() {
        // γ = H_n - ln n - 1/(2n) + 1/(12n²) - 1/(120n⁴) + O(n⁻⁶)
        let n = 1000u32;
        let h: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
        let nf = n as f64;
        let gamma = h - nf.ln() - 0.5 / nf + 1.0 / (12.0 * nf * nf) - 1.0 / (120.0 * nf.powi(4));
        assert!((digamma(1.0).unwrap() + gamma).abs() < 1e-13);
    }
}
