//! The circular-covariance likelihood ratio statistic.
//!
//! Given q groups of p-variate observations, the statistic rotates the
//! within-group scatter `A` and the total scatter `A + B` with the real
//! Fourier-type orthogonal matrix `U`, which diagonalises every symmetric
//! circulant matrix, and compares matched diagonal entries.
//!
//! Index conventions: the math is written with 1-based indices `j = 1..p`;
//! storage is 0-based, so index `j` lives at position `j - 1`.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// q independent samples of p-variate observations (one row per observation).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    groups: Vec<DMatrix<f64>>,
    p: usize,
}

impl GroupedSample {
    pub fn new(groups: Vec<DMatrix<f64>>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        let p = groups[0].ncols();
        if p == 0 {
            return Err(Error::InvalidDimension("p must be at least 1".into()));
        }
        for (k, g) in groups.iter().enumerate() {
            if g.ncols() != p {
                return Err(Error::InvalidInput(format!(
                    "group {} has {} columns, expected {p}",
                    k + 1,
                    g.ncols()
                )));
            }
            if g.nrows() == 0 {
                return Err(Error::InvalidInput(format!("group {} is empty", k + 1)));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "group {} contains non-finite values",
                    k + 1
                )));
            }
        }
        let s = GroupedSample { groups, p };
        if s.n() <= s.q() {
            return Err(Error::InsufficientSample(format!(
                "total sample size n={} must exceed the number of groups q={}",
                s.n(),
                s.q()
            )));
        }
        Ok(s)
    }

    /// Builds a sample from row-major slices, one per group.
    pub fn from_rows(p: usize, groups: &[Vec<f64>]) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be at least 1".into()));
        }
        let mut mats = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            if g.len() % p != 0 {
                return Err(Error::InvalidInput(format!(
                    "group {} has {} values, not a multiple of p={p}",
                    k + 1,
                    g.len()
                )));
            }
            mats.push(DMatrix::from_row_slice(g.len() / p, p, g));
        }
        GroupedSample::new(mats)
    }

    pub fn groups(&self) -> &[DMatrix<f64>] {
        &self.groups
    }

    pub fn q(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(|g| g.nrows()).sum()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.nrows()).collect()
    }

    pub(crate) fn group_means(&self) -> Vec<DVector<f64>> {
        self.groups.iter().map(column_means).collect()
    }

    pub(crate) fn overall_mean(&self) -> DVector<f64> {
        let mut total = DVector::zeros(self.p);
        for g in &self.groups {
            for row in g.row_iter() {
                total += row.transpose();
            }
        }
        total / self.n() as f64
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let mut mean = DVector::zeros(m.ncols());
    for row in m.row_iter() {
        mean += row.transpose();
    }
    mean / m.nrows() as f64
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Orthogonal matrix with entries `(cos θ + sin θ)/√p`, θ = 2π(i−1)(j−1)/p.
pub fn build_u_matrix(p: usize) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::InvalidDimension("p must be at least 1".into()));
    }
    let scale = 1.0 / (p as f64).sqrt();
    Ok(DMatrix::from_fn(p, p, |i, j| {
        // reduce the index product mod p so the angle stays in [0, 2π)
        let theta = 2.0 * PI * ((i * j) % p) as f64 / p as f64;
        scale * (theta.cos() + theta.sin())
    }))
}

/// Within-group scatter A = Σ_k (n_k − 1) S_k.
pub fn within_scatter(s: &GroupedSample) -> DMatrix<f64> {
    let p = s.p();
    let mut a = DMatrix::zeros(p, p);
    for (g, mean) in s.groups().iter().zip(s.group_means()) {
        for row in g.row_iter() {
            let d = row.transpose() - &mean;
            a.ger(1.0, &d, &d, 1.0);
        }
    }
    symmetrize(&mut a);
    a
}

/// Between-group scatter B = Σ_k n_k (x̄_k − x̄)(x̄_k − x̄)ᵀ.
pub fn between_scatter(s: &GroupedSample) -> DMatrix<f64> {
    let p = s.p();
    let overall = s.overall_mean();
    let mut b = DMatrix::zeros(p, p);
    for (g, mean) in s.groups().iter().zip(s.group_means()) {
        let d = mean - &overall;
        b.ger(g.nrows() as f64, &d, &d, 1.0);
    }
    symmetrize(&mut b);
    b
}

/// Output of [`lrt_statistic`].
#[derive(Debug, Clone, PartialEq)]
pub struct LrtResult {
    /// Λ in (0, 1].
    pub lambda: f64,
    /// W = −log Λ.
    pub w: f64,
    /// v*_j, position j−1.
    pub vstar: Vec<f64>,
    /// v**_j, position j−1.
    pub vdstar: Vec<f64>,
    /// Diagonal of A* = U A Uᵀ.
    pub a_diag: Vec<f64>,
    /// Diagonal of C* = U (A + B) Uᵀ.
    pub c_diag: Vec<f64>,
}

/// Averages the diagonal of a rotated scatter over the cyclic pairs
/// (j, p − j + 2). Positions j = 1 and, for even p, j = m + 1 are unpaired.
pub(crate) fn paired_average(diag: &[f64]) -> Vec<f64> {
    let p = diag.len();
    (0..p)
        .map(|i| {
            // 1-based j = i + 1 pairs with p − j + 2, i.e. 0-based (p − i) mod p
            let partner = (p - i) % p;
            if partner == i {
                diag[i]
            } else {
                0.5 * (diag[i] + diag[partner])
            }
        })
        .collect()
}

fn rotated_diagonal(u: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let um = u * m;
    (0..u.nrows())
        .map(|j| um.row(j).dot(&u.row(j)))
        .collect()
}

/// Computes Λ = ∏_j v*_j / v**_j and W = −log Λ.
pub fn lrt_statistic(s: &GroupedSample) -> Result<LrtResult> {
    let u = build_u_matrix(s.p())?;
    lrt_statistic_with(&u, s)
}

/// Same as [`lrt_statistic`] with a caller-supplied `U` (reused across
/// replications of a simulation).
pub fn lrt_statistic_with(u: &DMatrix<f64>, s: &GroupedSample) -> Result<LrtResult> {
    if u.nrows() != s.p() || u.ncols() != s.p() {
        return Err(Error::InvalidDimension(format!(
            "U is {}x{}, sample has p={}",
            u.nrows(),
            u.ncols(),
            s.p()
        )));
    }
    if s.n() <= s.q() {
        return Err(Error::InsufficientSample(format!(
            "n={} must exceed q={}",
            s.n(),
            s.q()
        )));
    }
    let a = within_scatter(s);
    let b = between_scatter(s);
    let c = &a + &b;
    let a_diag = rotated_diagonal(u, &a);
    let c_diag = rotated_diagonal(u, &c);
    let vstar = paired_average(&a_diag);
    let vdstar = paired_average(&c_diag);

    let mut w = 0.0;
    for (j, (&va, &vc)) in vstar.iter().zip(&vdstar).enumerate() {
        if !(va > 0.0) || !(vc > 0.0) {
            return Err(Error::DegenerateScatter(format!(
                "v*_{} = {va}, v**_{} = {vc}; projected scatter is singular",
                j + 1,
                j + 1
            )));
        }
        // v** ≥ v* holds exactly in exact arithmetic; rounding can flip
        // the last bit when B projects to zero
        w += (vc.ln() - va.ln()).max(0.0);
    }
    Ok(LrtResult {
        lambda: (-w).exp(),
        w,
        vstar,
        vdstar,
        a_diag,
        c_diag,
    })
}
