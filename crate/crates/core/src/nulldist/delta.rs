//! Distance between the standardized law of W and the standard Normal,
//! measured on characteristic functions:
//!
//! ```text
//! Δ = (1/2π) ∫ |Φ_Z(t) − e^{−t²/2}| / |t| dt,   Z = (W − E W) / sd(W)
//! ```
//!
//! Δ bounds sup_w |F_Z(w) − Φ(w)| from above.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{cf_w, BetaProductModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaControl {
    /// Width of each Gauss–Legendre panel, in standardized units of t.
    pub panel_width: f64,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Required bound on the neglected tail of the integral.
    pub tail_tol: f64,
    /// Largest truncation point allowed before giving up.
    pub max_t: f64,
}

impl Default for DeltaControl {
    fn default() -> Self {
        DeltaControl {
            panel_width: 0.25,
            nodes_per_panel: 16,
            tail_tol: 1e-10,
            max_t: 1e4,
        }
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Computes Δ for the standardized W of `model`.
pub fn delta_measure(model: &BetaProductModel, ctrl: &DeltaControl) -> Result<f64> {
    if !(ctrl.panel_width > 0.0) || ctrl.nodes_per_panel == 0 || !(ctrl.max_t > 0.0) {
        return Err(Error::InvalidParameters("bad integration control".into()));
    }
    let na = model.normal_approx();
    let sd = na.sd();
    let mean = na.mean;
    let standardized = |t: f64| -> Complex64 {
        cf_w(model, t / sd) * Complex64::from_polar(1.0, -t * mean / sd)
    };
    let integrand = |t: f64| -> f64 {
        let diff = standardized(t) - Complex64::new((-0.5 * t * t).exp(), 0.0);
        diff.norm() / t
    };

    // |Φ_W(t)| ~ C |t|^{−κ} for large t
    let (_, b) = model.single_params();
    let (_, bp) = model.paired_params();
    let kappa = model.n_single as f64 * b + model.n_paired as f64 * bp;

    let (nodes, weights) = gauss_legendre(ctrl.nodes_per_panel);
    let h = ctrl.panel_width;
    let mut total = 0.0;
    let mut lo = 0.0;
    loop {
        let hi = lo + h;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * h;
        total += nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &wt)| wt * integrand(mid + half * x))
            .sum::<f64>()
            * half;
        lo = hi;
        if lo >= 6.0 {
            let tail = standardized(lo).norm() / kappa + (-0.5 * lo * lo).exp() / (lo * lo);
            if tail / PI < ctrl.tail_tol {
                break;
            }
        }
        if lo >= ctrl.max_t {
            return Err(Error::Precision(format!(
                "CF tail did not fall below {:e} by t={}",
                ctrl.tail_tol, ctrl.max_t
            )));
        }
    }
    // the integrand is even in t
    Ok(total / PI)
}
