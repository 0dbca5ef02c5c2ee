//! Closed-form null law for odd q.
//!
//! When q is odd every Beta factor of Λ has an integer second parameter, and
//! −log Beta(a, b) with integer b is a sum of b independent exponentials with
//! rates a, a+1, …, a+b−1. Collecting equal rates, W = −log Λ is a sum of
//! independent Gamma(r_ℓ, λ_ℓ) variables with integer shapes and distinct
//! rates λ_ℓ = (n−q+ℓ−1)/2, ℓ = 1..q−1, and Λ = e^{−W}.
//!
//! The density of such a sum is a signed finite mixture of Gamma densities.
//! Its weights come from the partial-fraction expansion of
//! ∏ λ_ℓ^{r_ℓ} (λ_ℓ + s)^{−r_ℓ}, computed by the usual recursion on the
//! Taylor coefficients of (s + λ_j)^{r_j} F(s) around s = −λ_j.

use astro_float_num::BigFloat;
use num_complex::Complex64;

use super::extended::{self, big, RM};
use crate::error::{Error, Result};
use crate::specialfn::ln_gamma_unchecked;

/// Above this condition number the mixture is summed in extended precision.
const EXTENDED_ABOVE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
struct MixtureTerm {
    rate: f64,
    shape: u32,
    weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct ExtendedTerms {
    bits: usize,
    /// (rate, weights for shapes 1..=r) per distinct rate
    groups: Vec<(BigFloat, Vec<BigFloat>)>,
}

/// W as a sum of independent Gamma(shape_ℓ, rate_ℓ) variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GigRepresentation {
    shapes: Vec<u32>,
    rates: Vec<f64>,
    terms: Vec<MixtureTerm>,
    condition: f64,
    extended: Option<ExtendedTerms>,
}

impl GigRepresentation {
    /// Builds the representation from explicit shapes and rates.
    ///
    /// Zero shapes are allowed (the term is absent); rates of the present
    /// terms must be positive and pairwise distinct.
    pub fn from_parts(shapes: Vec<u32>, rates: Vec<f64>) -> Result<Self> {
        if shapes.len() != rates.len() || shapes.is_empty() {
            return Err(Error::Representation(format!(
                "{} shapes vs {} rates",
                shapes.len(),
                rates.len()
            )));
        }
        let active: Vec<(u32, f64)> = shapes
            .iter()
            .zip(&rates)
            .filter(|(&r, _)| r > 0)
            .map(|(&r, &l)| (r, l))
            .collect();
        if active.is_empty() {
            return Err(Error::Representation("all shapes are zero".into()));
        }
        for &(_, l) in &active {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Representation(format!("rate {l} is not positive")));
            }
        }
        for (i, &(_, li)) in active.iter().enumerate() {
            for &(_, lj) in &active[i + 1..] {
                if li == lj {
                    return Err(Error::Representation(format!("repeated rate {li}")));
                }
            }
        }
        let mut ext = extended_terms(&active, 128);
        let mut condition = ext_condition(&ext);
        if condition > EXTENDED_ABOVE {
            // keep ~128 significant bits after cancellation
            let bits = 128 + condition.log2().ceil() as usize;
            if bits > ext.bits {
                ext = extended_terms(&active, bits);
                condition = ext_condition(&ext);
            }
        }
        let terms = ext
            .groups
            .iter()
            .flat_map(|(rate, ws)| {
                let rate = extended::to_f64(rate);
                ws.iter().enumerate().map(move |(k, w)| MixtureTerm {
                    rate,
                    shape: k as u32 + 1,
                    weight: extended::to_f64(w),
                })
            })
            .filter(|t| t.weight != 0.0)
            .collect();
        Ok(GigRepresentation {
            shapes,
            rates,
            terms,
            condition,
            extended: (condition > EXTENDED_ABOVE).then_some(ext),
        })
    }

    pub fn depth(&self) -> usize {
        self.shapes.len()
    }

    pub fn shapes(&self) -> &[u32] {
        &self.shapes
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Sum of absolute mixture weights. The weights sum to one, so this is
    /// the factor by which rounding errors are amplified in plain double
    /// precision.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Whether evaluations run in extended precision.
    pub fn is_extended(&self) -> bool {
        self.extended.is_some()
    }

    /// Signed mixture weights as (rate, shape, weight), rounded to f64.
    pub fn weights(&self) -> Vec<(f64, u32, f64)> {
        self.terms.iter().map(|t| (t.rate, t.shape, t.weight)).collect()
    }

    /// P(W ≤ w).
    pub fn cdf_w(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 0.0;
        }
        if w == f64::INFINITY {
            return 1.0;
        }
        if let Some(ext) = &self.extended {
            return ext.eval(w).0.clamp(0.0, 1.0);
        }
        kahan(self.terms.iter().map(|t| t.weight * erlang_cdf(t.shape, t.rate * w)))
            .clamp(0.0, 1.0)
    }

    /// P(W > w), summed directly so it keeps relative accuracy far in the tail.
    pub fn sf_w(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 1.0;
        }
        if w == f64::INFINITY {
            return 0.0;
        }
        if let Some(ext) = &self.extended {
            return ext.eval(w).1.clamp(0.0, 1.0);
        }
        kahan(self.terms.iter().map(|t| t.weight * erlang_sf(t.shape, t.rate * w)))
            .clamp(0.0, 1.0)
    }

    /// Density of W.
    pub fn pdf_w(&self, w: f64) -> f64 {
        if !(w > 0.0) || !w.is_finite() {
            return 0.0;
        }
        if let Some(ext) = &self.extended {
            return ext.eval(w).2.max(0.0);
        }
        kahan(self.terms.iter().map(|t| {
            let k = t.shape as f64;
            let ln = k * t.rate.ln() + (k - 1.0) * w.ln() - t.rate * w - ln_gamma_unchecked(k);
            t.weight * ln.exp()
        }))
        .max(0.0)
    }

    /// P(Λ ≤ z) = P(W ≥ −log z) for z in (0, 1).
    pub fn cdf_lambda(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return 0.0;
        }
        if z >= 1.0 {
            return 1.0;
        }
        self.sf_w(-z.ln())
    }

    /// Characteristic function ∏ (1 − it/λ_ℓ)^{−r_ℓ}.
    pub fn cf(&self, t: f64) -> Complex64 {
        let mut ln = Complex64::new(0.0, 0.0);
        for (&r, &l) in self.shapes.iter().zip(&self.rates) {
            if r > 0 {
                ln -= Complex64::new(1.0, -t / l).ln() * r as f64;
            }
        }
        ln.exp()
    }
}

fn kahan(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    acc
}

fn ext_condition(ext: &ExtendedTerms) -> f64 {
    ext.groups
        .iter()
        .flat_map(|(_, ws)| ws.iter())
        .map(|w| extended::to_f64(w).abs())
        .sum()
}

impl ExtendedTerms {
    /// (F(w), 1 − F(w), f(w)) with every Gamma term summed at full width.
    fn eval(&self, w: f64) -> (f64, f64, f64) {
        let p = self.bits;
        let wb = big(w, p);
        let mut sf = BigFloat::new(p);
        let mut pdf = BigFloat::new(p);
        for (rate, ws) in &self.groups {
            let x = rate.mul(&wb, p, RM);
            let e = extended::exp(&x.neg(), p);
            // term_i = x^i / i!, partial = Σ_{i<k} term_i
            let mut term = big(1.0, p);
            let mut partial = BigFloat::new(p);
            for (k, weight) in ws.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&x, p, RM).div(&big(k as f64, p), p, RM);
                }
                partial = partial.add(&term, p, RM);
                // Gamma(k+1, λ) survival = e^{−x} Σ_{i≤k} x^i/i!
                sf = sf.add(&weight.mul(&partial, p, RM).mul(&e, p, RM), p, RM);
                // density λ e^{−x} x^k / k!
                let dens = rate.mul(&term, p, RM).mul(&e, p, RM);
                pdf = pdf.add(&weight.mul(&dens, p, RM), p, RM);
            }
        }
        let cdf = big(1.0, p).sub(&sf, p, RM);
        (
            extended::to_f64(&cdf),
            extended::to_f64(&sf),
            extended::to_f64(&pdf),
        )
    }
}

/// Partial-fraction weights ω_{j,k} with density Σ ω_{j,k} Gamma(k, λ_j),
/// computed at `bits` of precision.
fn extended_terms(active: &[(u32, f64)], bits: usize) -> ExtendedTerms {
    let p = bits;
    let one = big(1.0, p);
    let lambdas: Vec<BigFloat> = active.iter().map(|&(_, l)| big(l, p)).collect();
    let mut k_const = one.clone();
    for (&(r, _), l) in active.iter().zip(&lambdas) {
        k_const = k_const.mul(&l.powi(r as usize, p, RM), p, RM);
    }
    let mut groups = Vec::with_capacity(active.len());
    for (j, &(rj, _)) in active.iter().enumerate() {
        let lj = &lambdas[j];
        // g_0 = K ∏_{l≠j} (λ_l − λ_j)^{−r_l}
        let mut g0 = k_const.clone();
        for (l, &(rl, _)) in active.iter().enumerate() {
            if l != j {
                let d = lambdas[l].sub(lj, p, RM).powi(rl as usize, p, RM);
                g0 = g0.div(&d, p, RM);
            }
        }
        // h_m = (1/m) Σ_{i=1}^{m} R(i) h_{m−i}, R(i) = Σ_{l≠j} r_l (λ_j − λ_l)^{−i}
        let depth = rj as usize;
        let inv_d: Vec<(f64, BigFloat)> = active
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != j)
            .map(|(l, &(rl, _))| (rl as f64, one.div(&lj.sub(&lambdas[l], p, RM), p, RM)))
            .collect();
        let mut big_r = Vec::with_capacity(depth);
        let mut powers: Vec<BigFloat> = inv_d.iter().map(|(_, d)| d.clone()).collect();
        for _ in 1..depth {
            let mut s = BigFloat::new(p);
            for ((rl, d), pw) in inv_d.iter().zip(powers.iter_mut()) {
                s = s.add(&pw.mul(&big(*rl, p), p, RM), p, RM);
                *pw = pw.mul(d, p, RM);
            }
            big_r.push(s);
        }
        let mut h = vec![one.clone(); depth];
        for m in 1..depth {
            let mut s = BigFloat::new(p);
            for i in 1..=m {
                s = s.add(&big_r[i - 1].mul(&h[m - i], p, RM), p, RM);
            }
            h[m] = s.div(&big(m as f64, p), p, RM);
        }
        // ω_{j,k} = g_{r_j − k} / λ_j^k
        let weights = (1..=rj)
            .map(|k| {
                g0.mul(&h[(rj - k) as usize], p, RM)
                    .div(&lj.powi(k as usize, p, RM), p, RM)
            })
            .collect();
        groups.push((lj.clone(), weights));
    }
    ExtendedTerms { bits, groups }
}

/// Regularised lower incomplete gamma P(k, x) for integer k ≥ 1.
pub(crate) fn erlang_cdf(k: u32, x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let kf = k as f64;
    if x < kf {
        // P = e^{−x} Σ_{i≥k} x^i / i!, all terms positive
        let mut term = (kf * x.ln() - x - ln_gamma_unchecked(kf + 1.0)).exp();
        let mut sum = term;
        let mut i = kf;
        loop {
            i += 1.0;
            term *= x / i;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        (1.0 - erlang_sf(k, x)).max(0.0)
    }
}

/// Regularised upper incomplete gamma Q(k, x) for integer k ≥ 1.
pub(crate) fn erlang_sf(k: u32, x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let kf = k as f64;
    if x < kf {
        return 1.0 - erlang_cdf(k, x);
    }
    // e^{−x} Σ_{i<k} x^i / i!, summed from the largest term down
    let mut term = ((kf - 1.0) * x.ln() - x - ln_gamma_unchecked(kf)).exp();
    let mut sum = 0.0;
    let mut i = kf - 1.0;
    loop {
        sum += term;
        if i == 0.0 || term < sum * 1e-17 {
            break;
        }
        term *= i / x;
        i -= 1.0;
    }
    sum.min(1.0)
}

/// Shapes r_ℓ and rates (n−q+ℓ−1)/2 of W for odd q.
pub fn gig_representation(n: usize, q: usize, p: usize) -> Result<GigRepresentation> {
    if q.is_multiple_of(2) {
        return Err(Error::UnsupportedParity(format!(
            "closed form needs odd q, got q={q}; use CF inversion"
        )));
    }
    super::beta_product_model(n, q, p)?;
    let half = p / 2;
    let odd_shape = (half + 1) as u32;
    let even_shape = (p - half - 1) as u32;
    let shapes = (1..q)
        .map(|l| if l % 2 == 1 { odd_shape } else { even_shape })
        .collect();
    let rates = (1..q).map(|l| (n - q + l - 1) as f64 / 2.0).collect();
    GigRepresentation::from_parts(shapes, rates)
}

/// P(W ≤ w) from the closed form.
pub fn gig_cdf_w(rep: &GigRepresentation, w: f64) -> f64 {
    rep.cdf_w(w)
}

/// P(Λ ≤ z) from the closed form.
pub fn egig_cdf_lambda(rep: &GigRepresentation, z: f64) -> f64 {
    rep.cdf_lambda(z)
}
