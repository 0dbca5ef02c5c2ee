//! Covariance structures and multivariate generators for simulation studies.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// σ₀..σ_m with m = ⌊p/2⌋; entry (i, j) is σ_{min(|i−j|, p−|i−j|)}.
    Circular(Vec<f64>),
    CompoundSymmetric { sigma2: f64, rho: f64 },
    Spherical(f64),
    Diagonal(Vec<f64>),
    FullPD(DMatrix<f64>),
}

impl CovarianceSpec {
    /// Short text form without commas, used in scenario descriptors.
    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        match self {
            CovarianceSpec::Circular(s) => format!("circular({})", list(s)),
            CovarianceSpec::CompoundSymmetric { sigma2, rho } => format!("cs({sigma2};{rho})"),
            CovarianceSpec::Spherical(s) => format!("spherical({s})"),
            CovarianceSpec::Diagonal(d) => format!("diagonal({})", list(d)),
            CovarianceSpec::FullPD(m) => format!("full({}x{})", m.nrows(), m.ncols()),
        }
    }
}

/// Checks symmetry and min eigenvalue > 1e-10 · max eigenvalue.
fn check_pd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParameters("covariance matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let min = eig.min();
    let max = eig.max();
    if !(max > 0.0) || min <= 1e-10 * max {
        return Err(Error::InvalidParameters(format!(
            "covariance matrix is not positive definite (minimum eigenvalue {min:.6e})"
        )));
    }
    Ok(m)
}

pub fn build_covariance(spec: &CovarianceSpec, p: usize) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::InvalidDimension("p must be at least 1".into()));
    }
    let m = match spec {
        CovarianceSpec::Circular(sigma) => {
            if sigma.len() != p / 2 + 1 {
                return Err(Error::InvalidParameters(format!(
                    "circular covariance for p={p} needs {} values, got {}",
                    p / 2 + 1,
                    sigma.len()
                )));
            }
            DMatrix::from_fn(p, p, |i, j| {
                let d = i.abs_diff(j);
                sigma[d.min(p - d)]
            })
        }
        &CovarianceSpec::CompoundSymmetric { sigma2, rho } => {
            let lower = if p > 1 { -1.0 / (p as f64 - 1.0) } else { f64::NEG_INFINITY };
            if !(rho > lower && rho < 1.0) || !(sigma2 > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "compound symmetry needs σ² > 0 and ρ in ({lower}, 1), got ({sigma2}, {rho})"
                )));
            }
            DMatrix::from_fn(p, p, |i, j| if i == j { sigma2 } else { sigma2 * rho })
        }
        &CovarianceSpec::Spherical(s2) => DMatrix::identity(p, p) * s2,
        CovarianceSpec::Diagonal(d) => {
            if d.len() != p {
                return Err(Error::InvalidParameters(format!(
                    "diagonal covariance needs {p} values, got {}",
                    d.len()
                )));
            }
            DMatrix::from_diagonal(&DVector::from_column_slice(d))
        }
        CovarianceSpec::FullPD(m) => {
            if m.shape() != (p, p) {
                return Err(Error::InvalidParameters(format!(
                    "full covariance must be {p}x{p}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            m.clone()
        }
    };
    check_pd(m)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Normal,
    StudentT(f64),
    Cauchy,
    /// Slant vector α (direct parametrization).
    SkewNormal(Vec<f64>),
    SkewT { nu: f64, slant: Vec<f64> },
    SkewCauchy(Vec<f64>),
}

impl Family {
    fn nu(&self) -> Option<f64> {
        match self {
            Family::StudentT(nu) | Family::SkewT { nu, .. } => Some(*nu),
            Family::Cauchy | Family::SkewCauchy(_) => Some(1.0),
            _ => None,
        }
    }

    fn slant(&self) -> Option<&[f64]> {
        match self {
            Family::SkewNormal(a) | Family::SkewT { slant: a, .. } | Family::SkewCauchy(a) => {
                Some(a)
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        match self {
            Family::Normal => "normal".into(),
            Family::StudentT(nu) => format!("t({nu})"),
            Family::Cauchy => "cauchy".into(),
            Family::SkewNormal(a) => format!("skew_normal({})", list(a)),
            Family::SkewT { nu, slant } => format!("skew_t({nu};{})", list(slant)),
            Family::SkewCauchy(a) => format!("skew_cauchy({})", list(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub family: Family,
    /// Location vector; its length fixes p.
    pub location: Vec<f64>,
    pub scale: CovarianceSpec,
}

impl DistributionSpec {
    pub fn p(&self) -> usize {
        self.location.len()
    }
}

/// A prepared sampler: factorizations are computed once per spec.
#[derive(Debug, Clone)]
pub struct Generator {
    p: usize,
    location: DVector<f64>,
    /// Lower Cholesky factor of Σ, or of the (p+1)-dimensional
    /// [[1, δᵀ], [δ, Ω̄]] for skewed families.
    factor: DMatrix<f64>,
    /// Marginal scales ω for skewed families.
    omega: Option<DVector<f64>>,
    chi: Option<(f64, ChiSquared<f64>)>,
}

impl Generator {
    pub fn new(dist: &DistributionSpec) -> Result<Generator> {
        let p = dist.p();
        let sigma = build_covariance(&dist.scale, p)?;
        let chi = match dist.family.nu() {
            Some(nu) if !(nu > 0.0 && nu.is_finite()) => {
                return Err(Error::InvalidParameters(format!(
                    "degrees of freedom must be positive, got {nu}"
                )))
            }
            Some(nu) => Some((
                nu,
                ChiSquared::new(nu).map_err(|e| Error::InvalidParameters(e.to_string()))?,
            )),
            None => None,
        };
        let (factor, omega) = match dist.family.slant() {
            None => (lower_cholesky(sigma)?, None),
            Some(alpha) => {
                if alpha.len() != p {
                    return Err(Error::InvalidParameters(format!(
                        "slant vector needs {p} values, got {}",
                        alpha.len()
                    )));
                }
                let omega = sigma.diagonal().map(f64::sqrt);
                let corr = DMatrix::from_fn(p, p, |i, j| sigma[(i, j)] / (omega[i] * omega[j]));
                let a = DVector::from_column_slice(alpha);
                let ca = &corr * &a;
                let delta = &ca / (1.0 + a.dot(&ca)).sqrt();
                let mut star = DMatrix::identity(p + 1, p + 1);
                star.view_mut((1, 1), (p, p)).copy_from(&corr);
                for i in 0..p {
                    star[(0, i + 1)] = delta[i];
                    star[(i + 1, 0)] = delta[i];
                }
                (lower_cholesky(star)?, Some(omega))
            }
        };
        Ok(Generator {
            p,
            location: DVector::from_column_slice(&dist.location),
            factor,
            omega,
            chi,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Draws `rows` i.i.d. observations, one per row.
    pub fn sample(&self, rows: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let p = self.p;
        let dim = self.factor.nrows();
        let mut out = DMatrix::zeros(rows, p);
        let mut z = DVector::zeros(dim);
        for r in 0..rows {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let x = &self.factor * &z;
            let mut y: DVector<f64> = match &self.omega {
                None => x,
                Some(omega) => {
                    // keep the residual block, reflected when the
                    // conditioning coordinate is negative
                    let sign = if x[0] > 0.0 { 1.0 } else { -1.0 };
                    DVector::from_fn(p, |i, _| sign * x[i + 1] * omega[i])
                }
            };
            if let Some((nu, chi)) = &self.chi {
                let v: f64 = rng.sample(chi);
                y /= (v / nu).sqrt();
            }
            y += &self.location;
            out.row_mut(r).copy_from(&y.transpose());
        }
        out
    }
}

fn lower_cholesky(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(m)
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidParameters("matrix is not positive definite".into()))
}

/// `n_k` rows from `dist` using the stream derived from `seed`.
pub fn sample(dist: &DistributionSpec, n_k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let g = Generator::new(dist)?;
    let mut rng = seed::stream(seed, 0);
    Ok(g.sample(n_k, &mut rng))
}

/// Mean shift of the non-baseline groups: the listed values are spread over
/// contiguous blocks of variables, block b covering [b·p/L, (b+1)·p/L).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec(pub Vec<f64>);

impl ShiftSpec {
    pub fn vector(&self, p: usize) -> Result<DVector<f64>> {
        let l = self.0.len();
        if l == 0 || l > p {
            return Err(Error::Config(format!(
                "shift needs between 1 and p={p} values, got {l}"
            )));
        }
        Ok(DVector::from_fn(p, |i, _| self.0[i * l / p]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn describe(&self) -> String {
        let vals: Vec<String> = self.0.iter().map(|v| format!("{v:+}")).collect();
        format!("shift({})", vals.join(";"))
    }
}

/// Adds the shift to every group except the first.
pub fn apply_shift(groups: &[DMatrix<f64>], shift: &ShiftSpec) -> Result<Vec<DMatrix<f64>>> {
    let Some(first) = groups.first() else {
        return Err(Error::Config("no groups to shift".into()));
    };
    let v = shift.vector(first.ncols())?.transpose();
    Ok(groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let mut g = g.clone();
            if k > 0 {
                for mut row in g.row_iter_mut() {
                    row += &v;
                }
            }
            g
        })
        .collect())
}
