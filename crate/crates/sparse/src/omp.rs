//! Orthogonal matching pursuit over a unit-norm dictionary.
//!
//! Classical greedy loop: pick the atom with the largest absolute inner
//! product against the current residual (ties to the lowest column index),
//! re-solve least squares on the accumulated support, update the residual.
//! Every step is deterministic, so identical inputs give bit-identical codes.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use srcgeo_core::span::RANK_REL_TOL;
use srcgeo_core::svd::thin_svd;

/// Atom norms may deviate from 1 by at most this much.
pub const ATOM_NORM_TOL: f64 = 1e-6;

/// Default residual floor: the budget is the intended stopping rule, the
/// floor only avoids churning on numerically-zero residuals.
pub const DEFAULT_STOP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OmpError {
    #[error("budget {budget} exceeds min(p, n) = {limit}")]
    BudgetTooLarge { budget: usize, limit: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("dictionary atom {column} is not unit-norm: |norm - 1| = {deviation:.3e}")]
    NotNormalized { column: usize, deviation: f64 },
    #[error("target dimension {target} does not match dictionary rows {rows}")]
    DimensionMismatch { target: usize, rows: usize },
}

/// Result of a pursuit run: support in selection order, least-squares
/// coefficients on that support, and the final residual.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SparseCode {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub final_residual_norm: f64,
    pub iterations: usize,
    /// Set when some support system was rank-deficient and solved by
    /// minimum-norm least squares (duplicated atoms are legal).
    pub rank_deficient: bool,
}

impl SparseCode {
    /// Expands the support/coefficient pairs into a dense length-`n` vector.
    pub fn to_dense(&self, n: usize) -> DVector<f64> {
        let mut c = DVector::zeros(n);
        for (&idx, &v) in self.support.iter().zip(&self.coefficients) {
            c[idx] = v;
        }
        c
    }

    /// `|| A_S^T (z - A_S c) ||`, the normal-equations optimality defect of
    /// the stored coefficients.
    pub fn normal_equations_defect(&self, dictionary: &DMatrix<f64>, target: &DVector<f64>) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        let sub = columns(dictionary, &self.support);
        let coeff = DVector::from_column_slice(&self.coefficients);
        (sub.transpose() * (target - &sub * coeff)).norm()
    }
}

fn columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &m.column(i));
    }
    out
}

/// Minimum-norm least squares `min_c ||b - A c||` via SVD; also reports
/// whether the system was rank-deficient.
pub(crate) fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let svd = thin_svd(a);
    let eps = RANK_REL_TOL * svd.sigma_max();
    let deficient = svd.rank_at(eps) < a.ncols();
    (svd.solve_min_norm(b, eps), deficient)
}

/// Greedy pursuit with budget `s` on a unit-norm dictionary.
///
/// Stops as soon as the support reaches `s` atoms or the residual norm drops
/// to `stop_tol`. The residual norm is non-increasing across iterations
/// because the least-squares problem is re-solved on the full support.
pub fn omp(
    dictionary: &DMatrix<f64>,
    target: &DVector<f64>,
    budget: usize,
    stop_tol: f64,
) -> Result<SparseCode, OmpError> {
    let (p, n) = dictionary.shape();
    if target.len() != p {
        return Err(OmpError::DimensionMismatch {
            target: target.len(),
            rows: p,
        });
    }
    if budget == 0 {
        return Err(OmpError::ZeroBudget);
    }
    if budget > p.min(n) {
        return Err(OmpError::BudgetTooLarge {
            budget,
            limit: p.min(n),
        });
    }
    for j in 0..n {
        let deviation = (dictionary.column(j).norm() - 1.0).abs();
        if deviation > ATOM_NORM_TOL {
            return Err(OmpError::NotNormalized {
                column: j,
                deviation,
            });
        }
    }

    let mut support: Vec<usize> = Vec::with_capacity(budget);
    let mut coefficients = DVector::zeros(0);
    let mut residual = target.clone();
    let mut residual_norm = residual.norm();
    let mut rank_deficient = false;
    let mut iterations = 0;

    while support.len() < budget && residual_norm > stop_tol {
        let correlations = dictionary.transpose() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if support.contains(&j) {
                continue;
            }
            let c = correlations[j].abs();
            // strictly-greater keeps the lowest index on ties
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((j, c));
            }
        }
        let (chosen, _) = best.expect("budget <= n leaves an unselected atom");
        support.push(chosen);

        let sub = columns(dictionary, &support);
        let (c, deficient) = min_norm_lstsq(&sub, target);
        rank_deficient |= deficient;
        residual = target - &sub * &c;
        let new_norm = residual.norm();
        assert!(
            new_norm <= residual_norm + 1e-9,
            "residual increased: {residual_norm} -> {new_norm}"
        );
        residual_norm = new_norm;
        coefficients = c;
        iterations += 1;
    }

    Ok(SparseCode {
        support,
        coefficients: coefficients.as_slice().to_vec(),
        final_residual_norm: residual_norm,
        iterations,
        rank_deficient,
    })
}
