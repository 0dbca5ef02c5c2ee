//! Null laws when the total sample size N is itself random.
//!
//! N is restricted to n ≥ q+1 (the statistic needs n > q) and its law is
//! renormalized over that range. The null CDF of Λ is then the mixture
//! Σ_n P(N = n) F_Λ(z | n, q, p).

use statrs::distribution::{Binomial, Discrete, DiscreteCDF, NegativeBinomial, Poisson};

use crate::error::{Error, Result};
use crate::nulldist::{beta_product_model, bisect_cdf, NullCdf, NullMethod};

/// Law of the total sample size N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountModel {
    Poisson { lambda: f64 },
    /// N ~ Binomial(trials, prob), support 0..=trials.
    Binomial { trials: u64, prob: f64 },
    /// N counts the trials needed for `successes` successes, support n ≥ successes.
    NegativeBinomial { successes: u64, prob: f64 },
    PointMass(u64),
}

pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

impl CountModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        match *self {
            CountModel::Poisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("Poisson rate must be positive, got {lambda}"))
            }
            CountModel::Binomial { trials, prob } if trials == 0 || !(prob > 0.0 && prob < 1.0) => {
                bad(format!("Binomial needs trials ≥ 1 and prob in (0,1), got ({trials}, {prob})"))
            }
            CountModel::NegativeBinomial { successes, prob }
                if successes == 0 || !(prob > 0.0 && prob < 1.0) =>
            {
                bad(format!(
                    "negative binomial needs successes ≥ 1 and prob in (0,1), got ({successes}, {prob})"
                ))
            }
            _ => Ok(()),
        }
    }

    /// (P(N = n), P(N > n)).
    fn mass_and_tail(&self, n: u64) -> (f64, f64) {
        match *self {
            CountModel::Poisson { lambda } => {
                let d = Poisson::new(lambda).expect("validated");
                (d.pmf(n), d.sf(n))
            }
            CountModel::Binomial { trials, prob } => {
                let d = Binomial::new(prob, trials).expect("validated");
                (d.pmf(n), d.sf(n))
            }
            CountModel::NegativeBinomial { successes, prob } => {
                if n < successes {
                    return (0.0, 1.0);
                }
                // statrs counts failures before the last success
                let d = NegativeBinomial::new(successes as f64, prob).expect("validated");
                (d.pmf(n - successes), d.sf(n - successes))
            }
            CountModel::PointMass(n0) => {
                if n == n0 {
                    (1.0, 0.0)
                } else {
                    (0.0, if n < n0 { 1.0 } else { 0.0 })
                }
            }
        }
    }
}

/// Renormalized law of N on n ≥ q+1, cut to a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedWeights {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Un-normalized mass P(N > u) beyond the last support point u.
    pub tail_mass_dropped: f64,
}

/// Weights P(N = n | N ≥ q+1) for n = q+1..=u, with u the smallest value
/// whose remaining tail is below `tail_eps`; a Binomial keeps its whole range.
pub fn truncated_weights(cm: &CountModel, q: usize, tail_eps: f64) -> Result<TruncatedWeights> {
    cm.validate()?;
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "tail_eps must lie in (0,1), got {tail_eps}"
        )));
    }
    let first = q as u64 + 1;
    if let CountModel::PointMass(n0) = *cm {
        if n0 < first {
            return Err(Error::InvalidParameters(format!(
                "point mass at n={n0} needs n ≥ q+1 = {first}"
            )));
        }
        return Ok(TruncatedWeights {
            support: vec![n0 as usize],
            weights: vec![1.0],
            tail_mass_dropped: 0.0,
        });
    }
    let last = match *cm {
        CountModel::Binomial { trials, .. } => trials,
        _ => u64::MAX,
    };
    // 1 − Σ_{i ≤ q} f(i)
    let renorm = cm.mass_and_tail(q as u64).1;
    if !(renorm > 0.0) || first > last {
        return Err(Error::DegenerateWeights(format!(
            "no mass on n ≥ q+1 = {first}"
        )));
    }
    let mut support = Vec::new();
    let mut raw = Vec::new();
    let mut n = first;
    let tail = loop {
        let (mass, tail) = cm.mass_and_tail(n);
        if mass > 0.0 {
            support.push(n as usize);
            raw.push(mass);
        }
        if n == last || (last == u64::MAX && tail < tail_eps) {
            break tail.max(0.0);
        }
        n += 1;
    };
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights(format!(
            "mass on n ≥ {first} underflows"
        )));
    }
    Ok(TruncatedWeights {
        support,
        weights: raw.iter().map(|m| m / total).collect(),
        tail_mass_dropped: tail,
    })
}

/// Mixture of fixed-n null laws.
#[derive(Debug, Clone)]
pub struct MixtureLaw {
    weights: Vec<f64>,
    laws: Vec<NullCdf>,
}

impl MixtureLaw {
    pub fn new(tw: &TruncatedWeights, q: usize, p: usize, method: NullMethod) -> Result<Self> {
        if tw.support.is_empty() {
            return Err(Error::EmptyRequest("no support points".into()));
        }
        let laws = tw
            .support
            .iter()
            .map(|&n| NullCdf::resolve(&beta_product_model(n, q, p)?, method))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureLaw {
            weights: tw.weights.clone(),
            laws,
        })
    }

    /// P(W ≤ w).
    pub fn cdf_w(&self, w: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (wt, law) in self.weights.iter().zip(&self.laws) {
            acc += wt * law.cdf_w(w)?;
        }
        Ok(acc.clamp(0.0, 1.0))
    }

    /// P(Λ ≤ z).
    pub fn cdf_lambda(&self, z: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (wt, law) in self.weights.iter().zip(&self.laws) {
            acc += wt * law.cdf_lambda(z)?;
        }
        Ok(acc.clamp(0.0, 1.0))
    }

    /// Λ_α with P(Λ ≤ Λ_α) = α.
    pub fn quantile_lambda(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        let w = bisect_cdf(|w| self.cdf_w(w), 1.0 - alpha)?;
        Ok((-w).exp())
    }
}

/// Σ_n P(N = n) F_Λ(z | n, q, p).
pub fn mixture_cdf_lambda(
    tw: &TruncatedWeights,
    q: usize,
    p: usize,
    z: f64,
    method: NullMethod,
) -> Result<f64> {
    MixtureLaw::new(tw, q, p, method)?.cdf_lambda(z)
}

/// Σ_n P(N = n) φ(w; mean(n), variance(n)), the Normal-mixture density of
/// W = −log Λ on `grid`.
pub fn mixture_normal_pdf(
    tw: &TruncatedWeights,
    q: usize,
    p: usize,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let comps = tw
        .support
        .iter()
        .map(|&n| Ok(beta_product_model(n, q, p)?.normal_approx()))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid
        .iter()
        .map(|&w| {
            comps
                .iter()
                .zip(&tw.weights)
                .map(|(c, wt)| wt * c.pdf_w(w))
                .sum()
        })
        .collect())
}
