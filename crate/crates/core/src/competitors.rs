//! High-dimensional mean tests used for comparison with the LRT.
//!
//! All four reject for large values of their statistic. Fujikoshi and Schott
//! handle any q ≥ 2; Chen–Qin and Zhang are two-sample tests.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::error::{Error, Result};
use crate::statistic::{between_scatter, within_scatter, GroupedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompetitorName {
    Fujikoshi,
    Schott,
    ChenQin,
    Zhang,
}

impl CompetitorName {
    pub const ALL: [CompetitorName; 4] = [
        CompetitorName::Fujikoshi,
        CompetitorName::Schott,
        CompetitorName::ChenQin,
        CompetitorName::Zhang,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CompetitorName::Fujikoshi => "fujikoshi",
            CompetitorName::Schott => "schott",
            CompetitorName::ChenQin => "chen_qin",
            CompetitorName::Zhang => "zhang",
        }
    }

    /// Whether the test is defined only for two groups.
    pub fn two_sample_only(&self) -> bool {
        matches!(self, CompetitorName::ChenQin | CompetitorName::Zhang)
    }

    pub fn compute(&self, s: &GroupedSample) -> Result<CompetitorResult> {
        match self {
            CompetitorName::Fujikoshi => fujikoshi_stat(s),
            CompetitorName::Schott => schott_stat(s),
            CompetitorName::ChenQin => chen_qin_stat(s),
            CompetitorName::Zhang => zhang_stat(s),
        }
    }
}

impl std::str::FromStr for CompetitorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fujikoshi" | "fuji" => Ok(CompetitorName::Fujikoshi),
            "schott" => Ok(CompetitorName::Schott),
            "chen_qin" | "chenqin" => Ok(CompetitorName::ChenQin),
            "zhang" => Ok(CompetitorName::Zhang),
            other => Err(Error::InvalidParameters(format!("unknown test '{other}'"))),
        }
    }
}

/// Asymptotic reference law of a competitor statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    StandardNormal,
    /// β χ²_d, i.e. Gamma with shape d/2 and scale 2β.
    ScaledChiSquare { d: f64, beta: f64 },
}

impl Reference {
    /// Upper-tail critical value at level α.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        match *self {
            Reference::StandardNormal => Normal::standard().inverse_cdf(1.0 - alpha),
            Reference::ScaledChiSquare { d, beta } => {
                Gamma::new(d / 2.0, 1.0 / (2.0 * beta))
                    .expect("validated parameters")
                    .inverse_cdf(1.0 - alpha)
            }
        }
    }

    pub fn upper_tail(&self, x: f64) -> f64 {
        match *self {
            Reference::StandardNormal => Normal::standard().sf(x),
            Reference::ScaledChiSquare { d, beta } => Gamma::new(d / 2.0, 1.0 / (2.0 * beta))
                .expect("validated parameters")
                .sf(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetitorResult {
    pub name: CompetitorName,
    pub statistic: f64,
    pub reference: Reference,
    pub p_value: f64,
}

impl CompetitorResult {
    fn new(name: CompetitorName, statistic: f64, reference: Reference) -> Result<Self> {
        if !statistic.is_finite() {
            return Err(Error::EstimationDegenerate(format!(
                "{} statistic is not finite",
                name.name()
            )));
        }
        Ok(CompetitorResult {
            name,
            statistic,
            reference,
            p_value: reference.upper_tail(statistic).clamp(0.0, 1.0),
        })
    }
}

/// Unbiased estimate of tr(Σ²) from the within scatter A on m degrees of
/// freedom: m²/((m−1)(m+2)) [tr S² − (tr S)²/m], S = A/m.
fn trace_sigma_sq(a: &DMatrix<f64>, m: f64) -> f64 {
    let s = a / m;
    let tr = s.trace();
    let tr2 = s.norm_squared();
    m * m / ((m - 1.0) * (m + 2.0)) * (tr2 - tr * tr / m)
}

/// Shared numerator t = tr B/(q−1) − tr A/(n−q) and tr(Σ²) estimate.
fn trace_contrast(s: &GroupedSample, who: CompetitorName) -> Result<(f64, f64)> {
    let n = s.n() as f64;
    let q = s.q() as f64;
    if s.n() < s.q() + 2 {
        return Err(Error::InsufficientSample(format!(
            "{} needs n ≥ q+2 to estimate tr(Σ²), got n={}",
            who.name(),
            s.n()
        )));
    }
    let a = within_scatter(s);
    let b = between_scatter(s);
    let m = n - q;
    let tau = trace_sigma_sq(&a, m);
    if !(tau > 0.0) {
        return Err(Error::EstimationDegenerate(format!(
            "{}: estimated tr(Σ²) = {tau} is not positive",
            who.name()
        )));
    }
    Ok((b.trace() / (q - 1.0) - a.trace() / m, tau))
}

/// Schott's t_np divided by its estimated standard deviation
/// √(2 tr(Σ²)(n−1)/((q−1)(n−q))).
pub fn schott_stat(s: &GroupedSample) -> Result<CompetitorResult> {
    let name = CompetitorName::Schott;
    let (t, tau) = trace_contrast(s, name)?;
    let n = s.n() as f64;
    let q = s.q() as f64;
    let var = 2.0 * tau * (n - 1.0) / ((q - 1.0) * (n - q));
    CompetitorResult::new(name, t / var.sqrt(), Reference::StandardNormal)
}

/// Fujikoshi–Himeno–Wakaki's standardized Dempster trace criterion
/// √p [(n−q) tr B / ((q−1) tr A) − 1] / √(2 â₂/â₁² (1/(q−1) + 1/n)).
///
/// With â₁ = tr S/p and â₂ = tr(Σ²)^/p, the factors of p and tr S cancel and
/// the statistic equals t / √(2 tr(Σ²)^ (1/(q−1) + 1/n)).
pub fn fujikoshi_stat(s: &GroupedSample) -> Result<CompetitorResult> {
    let name = CompetitorName::Fujikoshi;
    let (t, tau) = trace_contrast(s, name)?;
    let n = s.n() as f64;
    let q = s.q() as f64;
    let var = 2.0 * tau * (1.0 / (q - 1.0) + 1.0 / n);
    CompetitorResult::new(name, t / var.sqrt(), Reference::StandardNormal)
}

fn require_two_groups(s: &GroupedSample, who: CompetitorName) -> Result<()> {
    if s.q() != 2 {
        return Err(Error::UnsupportedDesign(format!(
            "{} is a two-sample test, got q={}",
            who.name(),
            s.q()
        )));
    }
    Ok(())
}

/// Leave-two-out estimate of tr(Σ²) for one sample with Gram matrix G:
/// (1/(n(n−1))) Σ_{j≠k} [x_jᵀ(x_k − x̄_(j,k))] [x_kᵀ(x_j − x̄_(j,k))].
fn cq_trace_sq(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let nf = n as f64;
    let rows: Vec<f64> = (0..n).map(|j| g.row(j).sum()).collect();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let gjk = g[(j, k)];
            let a = gjk - (rows[j] - g[(j, j)] - gjk) / (nf - 2.0);
            let b = gjk - (rows[k] - g[(k, k)] - gjk) / (nf - 2.0);
            acc += a * b;
        }
    }
    acc / (nf * (nf - 1.0))
}

/// Leave-one-out estimate of tr(Σ₁Σ₂) from the cross Gram matrix H = X₁X₂ᵀ.
fn cq_trace_cross(h: &DMatrix<f64>) -> f64 {
    let (n1, n2) = h.shape();
    let (f1, f2) = (n1 as f64, n2 as f64);
    let rows: Vec<f64> = (0..n1).map(|l| h.row(l).sum()).collect();
    let cols: Vec<f64> = (0..n2).map(|k| h.column(k).sum()).collect();
    let mut acc = 0.0;
    for l in 0..n1 {
        for k in 0..n2 {
            let hlk = h[(l, k)];
            let a = hlk - (rows[l] - hlk) / (f2 - 1.0);
            let b = hlk - (cols[k] - hlk) / (f1 - 1.0);
            acc += a * b;
        }
    }
    acc / (f1 * f2)
}

fn chen_qin_numerator(g1: &DMatrix<f64>, g2: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let (f1, f2) = (g1.nrows() as f64, g2.nrows() as f64);
    let off_diag = |g: &DMatrix<f64>| g.sum() - g.trace();
    off_diag(g1) / (f1 * (f1 - 1.0)) + off_diag(g2) / (f2 * (f2 - 1.0)) - 2.0 * h.sum() / (f1 * f2)
}

/// Chen–Qin statistic: ‖x̄₁ − x̄₂‖² with the i = j self-products removed,
/// divided by its estimated standard deviation. The trace estimators are
/// unbiased for any mean but, unlike the numerator, not exactly invariant to
/// a common shift of the data.
pub fn chen_qin_stat(s: &GroupedSample) -> Result<CompetitorResult> {
    let name = CompetitorName::ChenQin;
    require_two_groups(s, name)?;
    let (x1, x2) = (&s.groups()[0], &s.groups()[1]);
    let (n1, n2) = (x1.nrows(), x2.nrows());
    if n1 < 3 || n2 < 3 {
        return Err(Error::InsufficientSample(format!(
            "chen_qin trace estimators need n_k ≥ 3, got ({n1}, {n2})"
        )));
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let g1 = x1 * x1.transpose();
    let g2 = x2 * x2.transpose();
    let h = x1 * x2.transpose();
    let t = chen_qin_numerator(&g1, &g2, &h);
    let var = 2.0 / (f1 * (f1 - 1.0)) * cq_trace_sq(&g1)
        + 2.0 / (f2 * (f2 - 1.0)) * cq_trace_sq(&g2)
        + 4.0 / (f1 * f2) * cq_trace_cross(&h);
    if !(var > 0.0) {
        return Err(Error::EstimationDegenerate(format!(
            "chen_qin: estimated variance {var} is not positive"
        )));
    }
    CompetitorResult::new(name, t / var.sqrt(), Reference::StandardNormal)
}

/// Zhang–Guo–Zhou–Cheng L²-norm statistic n₁n₂/n ‖x̄₁ − x̄₂‖² with its
/// βχ²_d reference law, d and β fitted from the pooled covariance.
pub fn zhang_stat(s: &GroupedSample) -> Result<CompetitorResult> {
    let name = CompetitorName::Zhang;
    require_two_groups(s, name)?;
    let sizes = s.group_sizes();
    if sizes.iter().any(|&k| k < 2) {
        return Err(Error::InsufficientSample(format!(
            "zhang needs n_k ≥ 2, got {sizes:?}"
        )));
    }
    let n = s.n() as f64;
    let (f1, f2) = (sizes[0] as f64, sizes[1] as f64);
    let means = s.group_means();
    let diff = &means[0] - &means[1];
    let t = f1 * f2 / n * diff.norm_squared();

    let pooled = within_scatter(s) / (n - 2.0);
    let tr = pooled.trace();
    let tr_sq = pooled.norm_squared();
    // unbiased for tr(Σ²) and tr²(Σ) under normality
    let trace_sq = (n - 2.0).powi(2) / ((n - 3.0) * n) * (tr_sq - tr * tr / (n - 2.0));
    let sq_trace = (n - 2.0) * (n - 1.0) / ((n - 3.0) * n) * (tr * tr - 2.0 * tr_sq / (n - 1.0));
    let beta = trace_sq / tr;
    let d = sq_trace / trace_sq;
    if !(beta > 0.0 && d > 0.0 && beta.is_finite() && d.is_finite()) {
        return Err(Error::EstimationDegenerate(format!(
            "zhang: fitted d={d}, β={beta} must be positive"
        )));
    }
    CompetitorResult::new(name, t, Reference::ScaledChiSquare { d, beta })
}
