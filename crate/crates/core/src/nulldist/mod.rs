//! Null distribution of Λ and of W = −log Λ.
//!
//! Under H0 with Normal data and a circular covariance, Λ is distributed as a
//! product of independent Beta variables:
//!
//! ```text
//! Λ ~ Y₁ · Y₂^{[p even]} · ∏_{j=2}^{p−m} (Y*_j)²,   m = ⌊p/2⌋
//! Y₁, Y₂ ~ Beta((n−q)/2, (q−1)/2),   Y*_j ~ Beta(n−q, q−1)
//! ```
//!
//! Four routes to its distribution live here: Monte Carlo draws from the
//! Beta product, the closed-form sum-of-Gammas law for odd q ([`gig`]),
//! fixed-Talbot inversion of the transform of W ([`talbot`]) and the
//! Normal approximation in p built from digamma/trigamma moments.

mod delta;
mod extended;
pub mod gig;
pub mod talbot;

use rand::RngExt;
use rand_distr::Gamma;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::seed;
use crate::specialfn::{
    digamma_unchecked, ln_gamma_complex, ln_gamma_complex_reflected, ln_gamma_unchecked,
    trigamma_unchecked, ComplexValue,
};

pub use delta::{delta_measure, DeltaControl};
pub use gig::{egig_cdf_lambda, gig_cdf_w, gig_representation, GigRepresentation};
pub use talbot::TalbotControl;

/// Independent Beta factors making up Λ for a given (n, q, p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BetaProductModel {
    pub n: usize,
    pub q: usize,
    pub p: usize,
    /// ⌊p/2⌋
    pub m: usize,
    /// Number of Beta((n−q)/2, (q−1)/2) factors: 1 + [p even].
    pub n_single: usize,
    /// Number of squared Beta(n−q, q−1) factors: p − m − 1.
    pub n_paired: usize,
}

impl BetaProductModel {
    /// Parameters (a, b) of the unpaired factors.
    pub fn single_params(&self) -> (f64, f64) {
        ((self.n - self.q) as f64 / 2.0, (self.q - 1) as f64 / 2.0)
    }

    /// Parameters (a, b) of the paired factors.
    pub fn paired_params(&self) -> (f64, f64) {
        ((self.n - self.q) as f64, (self.q - 1) as f64)
    }

    /// log of the Laplace transform E[e^{−sW}], any complex s off the poles.
    pub fn ln_laplace(&self, s: ComplexValue) -> Result<ComplexValue> {
        let (a, b) = self.single_params();
        let (ap, bp) = self.paired_params();
        let lg = ln_gamma_complex_reflected;
        let mut acc = ComplexValue::new(0.0, 0.0);
        if self.n_single > 0 {
            let single = lg(s + a)? - lg(s + (a + b))?
                + (ln_gamma_unchecked(a + b) - ln_gamma_unchecked(a));
            acc += single * self.n_single as f64;
        }
        if self.n_paired > 0 {
            let s2 = s * 2.0;
            let paired = lg(s2 + ap)? - lg(s2 + (ap + bp))?
                + (ln_gamma_unchecked(ap + bp) - ln_gamma_unchecked(ap));
            acc += paired * self.n_paired as f64;
        }
        Ok(acc)
    }

    /// Exact mean and variance of W.
    pub fn normal_approx(&self) -> NormalApprox {
        let n = self.n as f64;
        let q = self.q as f64;
        let mu = digamma_unchecked((n - 1.0) / 2.0) - digamma_unchecked((n - q) / 2.0);
        let mu_star = digamma_unchecked(n - 1.0) - digamma_unchecked(n - q);
        let var = trigamma_unchecked((n - q) / 2.0) - trigamma_unchecked((n - 1.0) / 2.0);
        let var_star = trigamma_unchecked(n - q) - trigamma_unchecked(n - 1.0);
        let ns = self.n_single as f64;
        let np = self.n_paired as f64;
        NormalApprox {
            mean: ns * mu + 2.0 * np * mu_star,
            variance: ns * var + 4.0 * np * var_star,
            mu,
            mu_star,
            sigma2: var,
            sigma2_star: var_star,
        }
    }
}

/// Validates (n, q, p) and builds the Beta-product description.
pub fn beta_product_model(n: usize, q: usize, p: usize) -> Result<BetaProductModel> {
    if q < 2 {
        return Err(Error::InvalidParameters(format!("q must be at least 2, got {q}")));
    }
    if p == 0 {
        return Err(Error::InvalidDimension("p must be at least 1".into()));
    }
    if n <= q {
        return Err(Error::InsufficientSample(format!(
            "n={n} must exceed q={q}"
        )));
    }
    let m = p / 2;
    Ok(BetaProductModel {
        n,
        q,
        p,
        m,
        n_single: 1 + (p + 1) % 2,
        n_paired: p - m - 1,
    })
}

/// −log of a Beta(a, b) draw, computed as log(1 + G_b / G_a) to keep full
/// precision when the Beta variate is close to 1.
fn neg_log_beta<R: rand::Rng + ?Sized>(rng: &mut R, ga: &Gamma<f64>, gb: &Gamma<f64>) -> f64 {
    let x: f64 = rng.sample(ga);
    let y: f64 = rng.sample(gb);
    (y / x).ln_1p()
}

const MC_CHUNK: usize = 8192;

/// Draws `count` i.i.d. values of W from the Beta-product law.
///
/// Draws are produced in fixed-size chunks, each with a seed derived from
/// `(seed, chunk index)`, so the output is identical for any thread count.
pub fn mc_sample_w(model: &BetaProductModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptyRequest("count must be at least 1".into()));
    }
    let (a, b) = model.single_params();
    let (ap, bp) = model.paired_params();
    let ga = Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameters(e.to_string()))?;
    let gb = Gamma::new(b, 1.0).map_err(|e| Error::InvalidParameters(e.to_string()))?;
    let gap = Gamma::new(ap, 1.0).map_err(|e| Error::InvalidParameters(e.to_string()))?;
    let gbp = Gamma::new(bp, 1.0).map_err(|e| Error::InvalidParameters(e.to_string()))?;

    let mut out = vec![0.0; count];
    out.par_chunks_mut(MC_CHUNK)
        .enumerate()
        .for_each(|(chunk, slot)| {
            let mut rng = seed::stream(seed, chunk as u64);
            for w in slot.iter_mut() {
                let mut acc = 0.0;
                for _ in 0..model.n_single {
                    acc += neg_log_beta(&mut rng, &ga, &gb);
                }
                for _ in 0..model.n_paired {
                    acc += 2.0 * neg_log_beta(&mut rng, &gap, &gbp);
                }
                *w = acc;
            }
        });
    Ok(out)
}

/// Characteristic function Φ_W(t) = E[e^{itW}].
///
/// The paired factor is Γ(n−1)Γ(n−q−2it) / (Γ(n−q)Γ(n−1−2it)), which is
/// E[(Y*)^{−2it}] for Y* ~ Beta(n−q, q−1).
pub fn cf_w(model: &BetaProductModel, t: f64) -> ComplexValue {
    let (a, b) = model.single_params();
    let (ap, bp) = model.paired_params();
    let it = ComplexValue::new(0.0, t);
    // all arguments have positive real part, so the principal branch is safe
    let lg = |z: ComplexValue| ln_gamma_complex(z).expect("positive real part");
    let mut acc = ComplexValue::new(0.0, 0.0);
    if model.n_single > 0 {
        let single = lg(ComplexValue::new(a, 0.0) - it) - lg(ComplexValue::new(a + b, 0.0) - it)
            + (ln_gamma_unchecked(a + b) - ln_gamma_unchecked(a));
        acc += single * model.n_single as f64;
    }
    if model.n_paired > 0 {
        let single = lg(ComplexValue::new(ap, 0.0) - it * 2.0)
            - lg(ComplexValue::new(ap + bp, 0.0) - it * 2.0)
            + (ln_gamma_unchecked(ap + bp) - ln_gamma_unchecked(ap));
        acc += single * model.n_paired as f64;
    }
    acc.exp()
}

/// CDF of W by fixed-Talbot inversion of E[e^{−sW}] / s.
pub fn cdf_w_by_inversion(model: &BetaProductModel, w: f64) -> Result<f64> {
    cdf_w_by_inversion_with(model, w, &TalbotControl::default())
}

pub fn cdf_w_by_inversion_with(
    model: &BetaProductModel,
    w: f64,
    ctrl: &TalbotControl,
) -> Result<f64> {
    if w.is_nan() {
        return Err(Error::Domain("w is NaN".into()));
    }
    if w <= 0.0 {
        return Ok(0.0);
    }
    if w == f64::INFINITY {
        return Ok(1.0);
    }
    let f = talbot::invert(|s| Ok(model.ln_laplace(s)? - s.ln()), w, ctrl)?;
    Ok(f.clamp(0.0, 1.0))
}

/// Mean/variance of W and the per-factor moments they are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalApprox {
    pub mean: f64,
    pub variance: f64,
    /// E[−log Y₁]
    pub mu: f64,
    /// E[−log Y*_j]
    pub mu_star: f64,
    /// Var[−log Y₁]
    pub sigma2: f64,
    /// Var[−log Y*_j]
    pub sigma2_star: f64,
}

impl NormalApprox {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn cdf_w(&self, w: f64) -> f64 {
        std_normal().cdf((w - self.mean) / self.sd())
    }

    pub fn pdf_w(&self, w: f64) -> f64 {
        let z = (w - self.mean) / self.sd();
        (-0.5 * z * z).exp() / (self.sd() * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// w with P(W ≤ w) = prob.
    pub fn quantile_w(&self, prob: f64) -> f64 {
        self.mean + self.sd() * std_normal().inverse_cdf(prob)
    }
}

pub(crate) fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_approx(n: usize, q: usize, p: usize) -> Result<NormalApprox> {
    Ok(beta_product_model(n, q, p)?.normal_approx())
}

/// Which representation of the null law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullMethod {
    /// Closed form for odd q, fixed-Talbot inversion for even q.
    Exact,
    /// Closed-form sum of Gammas; odd q only.
    ExactEgig,
    /// Fixed-Talbot inversion of the transform of W; any q.
    CfInversion,
    /// Normal approximation for large p.
    Asymptotic,
}

impl NullMethod {
    pub fn name(&self) -> &'static str {
        match self {
            NullMethod::Exact => "exact",
            NullMethod::ExactEgig => "exact-egig",
            NullMethod::CfInversion => "cf-inversion",
            NullMethod::Asymptotic => "asymptotic",
        }
    }
}

impl std::str::FromStr for NullMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NullMethod::Exact),
            "exact-egig" | "egig" => Ok(NullMethod::ExactEgig),
            "cf-inversion" | "cf" | "inversion" => Ok(NullMethod::CfInversion),
            "asymptotic" | "asymp" | "normal" => Ok(NullMethod::Asymptotic),
            other => Err(Error::InvalidParameters(format!("unknown method '{other}'"))),
        }
    }
}

/// A null law of W resolved to one concrete evaluation route.
#[derive(Debug, Clone)]
pub enum NullCdf {
    Egig(GigRepresentation),
    Inversion(BetaProductModel, TalbotControl),
    Normal(NormalApprox),
}

impl NullCdf {
    pub fn resolve(model: &BetaProductModel, method: NullMethod) -> Result<NullCdf> {
        match method {
            NullMethod::ExactEgig => {
                Ok(NullCdf::Egig(gig_representation(model.n, model.q, model.p)?))
            }
            NullMethod::CfInversion => {
                Ok(NullCdf::Inversion(*model, TalbotControl::default()))
            }
            NullMethod::Asymptotic => Ok(NullCdf::Normal(model.normal_approx())),
            NullMethod::Exact => {
                if model.q % 2 == 1 {
                    return Ok(NullCdf::Egig(gig_representation(model.n, model.q, model.p)?));
                }
                Ok(NullCdf::Inversion(*model, TalbotControl::default()))
            }
        }
    }

    pub fn method(&self) -> NullMethod {
        match self {
            NullCdf::Egig(_) => NullMethod::ExactEgig,
            NullCdf::Inversion(..) => NullMethod::CfInversion,
            NullCdf::Normal(_) => NullMethod::Asymptotic,
        }
    }

    /// P(W ≤ w).
    pub fn cdf_w(&self, w: f64) -> Result<f64> {
        match self {
            NullCdf::Egig(rep) => Ok(rep.cdf_w(w)),
            NullCdf::Inversion(model, ctrl) => cdf_w_by_inversion_with(model, w, ctrl),
            NullCdf::Normal(na) => Ok(na.cdf_w(w)),
        }
    }

    /// P(Λ ≤ z) = 1 − F_W(−log z).
    pub fn cdf_lambda(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Ok(0.0);
        }
        if z >= 1.0 {
            return Ok(1.0);
        }
        self.sf_w(-z.ln())
    }

    /// P(W > w).
    pub fn sf_w(&self, w: f64) -> Result<f64> {
        if let NullCdf::Egig(rep) = self {
            return Ok(rep.sf_w(w));
        }
        Ok((1.0 - self.cdf_w(w)?).clamp(0.0, 1.0))
    }

    /// w with P(W ≤ w) = prob, by bisection.
    pub fn quantile_w(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "probability must lie in (0,1), got {prob}"
            )));
        }
        if let NullCdf::Normal(na) = self {
            return Ok(na.quantile_w(prob));
        }
        bisect_cdf(|w| self.cdf_w(w), prob)
    }
}

/// Bisection for F(w) = target on w > 0 with F a CDF supported on [0, ∞).
pub fn bisect_cdf<F: Fn(f64) -> Result<f64>>(cdf: F, target: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expand = 0;
    while cdf(hi)? < target {
        lo = hi;
        hi *= 2.0;
        expand += 1;
        if expand > 1100 {
            return Err(Error::Internal("bisection failed to bracket the quantile".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = cdf(mid)?;
        if (f - target).abs() < 1e-11 {
            return Ok(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Λ_α with P(Λ ≤ Λ_α) = α, i.e. the lower-α critical value of Λ.
pub fn quantile_lambda(model: &BetaProductModel, alpha: f64, method: NullMethod) -> Result<f64> {
    let law = NullCdf::resolve(model, method)?;
    quantile_lambda_with(&law, alpha)
}

pub fn quantile_lambda_with(law: &NullCdf, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    Ok((-law.quantile_w(1.0 - alpha)?).exp())
}

/// P(W ≥ w_obs) under H0; large W (small Λ) rejects.
pub fn p_value(model: &BetaProductModel, w_obs: f64, method: NullMethod) -> Result<f64> {
    let law = NullCdf::resolve(model, method)?;
    law.sf_w(w_obs)
}

/// Dispatches `cdf_w` for a given method.
pub fn cdf_w(model: &BetaProductModel, w: f64, method: NullMethod) -> Result<f64> {
    NullCdf::resolve(model, method)?.cdf_w(w)
}
