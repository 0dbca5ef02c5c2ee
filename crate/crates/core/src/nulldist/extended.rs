//! Thin helpers over arbitrary-precision floats for the ill-conditioned
//! closed-form sums.

use astro_float_num::{BigFloat, Consts, RoundingMode, Sign};
use std::cell::RefCell;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

pub(crate) fn big(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p)
}

pub(crate) fn exp(x: &BigFloat, p: usize) -> BigFloat {
    CONSTS.with(|cc| x.exp(p, RM, &mut cc.borrow_mut()))
}

/// Rounds to the nearest f64 (up to a negligible double rounding).
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        Some((m, _, sign, e, _)) => {
            let top = m.last().copied().unwrap_or(0) as f64;
            let next = if m.len() > 1 { m[m.len() - 2] as f64 } else { 0.0 };
            // mantissa is a fraction in [1/2, 1) spread over 64-bit words
            let frac = (top + next * 2f64.powi(-64)) * 2f64.powi(-64);
            let mut v = frac;
            let mut e = e;
            while e > 1000 {
                v *= 2f64.powi(1000);
                e -= 1000;
            }
            while e < -1000 {
                v *= 2f64.powi(-1000);
                e += 1000;
            }
            v *= 2f64.powi(e);
            if sign == Sign::Neg {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}
