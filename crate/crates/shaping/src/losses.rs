//! Batch-level geometry objectives: masked ridge self-expressiveness, the
//! scale-aware variance anchor, and inter-class subspace repulsion.
//!
//! Everything here is training-time regularization over an embedding batch.
//! No sparse codes, class residuals, margins, or predictions are computed in
//! this crate, and it must stay independent of the inference crates.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use srcgeo_core::span::{span_basis, BasisMode, SubspaceBasis};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("ridge weight must be positive, got {0}")]
    NonPositiveRidge(f64),
    #[error("cross-class weight must be non-negative, got {0}")]
    NegativeMask(f64),
    #[error("batch and labels disagree: {batch} columns vs {labels} labels")]
    LabelMismatch { batch: usize, labels: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("span extraction failed: {0}")]
    Span(#[from] srcgeo_core::span::SpanError),
}

/// Weights and inner parameters of the full geometry objective.
///
/// JSON keys follow the config file format: `lambda_se`, `beta_anchor`,
/// `lambda_rep`, `inner_lambda`, `inner_mu`, `anchor_c`, `rep_dim`,
/// `rep_drop_top`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub lambda_se: f64,
    pub beta_anchor: f64,
    pub lambda_rep: f64,
    /// Ridge weight of the masked self-expression solve.
    pub inner_lambda: f64,
    /// Cross-class coefficient penalty of the masked solve.
    pub inner_mu: f64,
    /// Variance-anchor scale; the per-coordinate floor is `anchor_c / sqrt(p)`.
    pub anchor_c: f64,
    /// Per-class subspace dimension used by the repulsion term.
    pub rep_dim: usize,
    /// Skip the leading singular direction of each class basis.
    pub rep_drop_top: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            lambda_se: 1.0,
            beta_anchor: 1.0,
            lambda_rep: 1.0,
            inner_lambda: 0.1,
            inner_mu: 1.0,
            anchor_c: 0.25,
            rep_dim: 2,
            rep_drop_top: false,
        }
    }
}

/// One masked self-expression instance: a batch, its class mask, and the
/// two inner weights.
#[derive(Debug, Clone)]
pub struct MaskedRidgeProblem {
    batch: DMatrix<f64>,
    labels: Vec<usize>,
    lambda: f64,
    mu: f64,
}

impl MaskedRidgeProblem {
    pub fn new(
        batch: DMatrix<f64>,
        labels: Vec<usize>,
        lambda: f64,
        mu: f64,
    ) -> Result<Self, LossError> {
        if batch.ncols() == 0 {
            return Err(LossError::EmptyBatch);
        }
        if labels.len() != batch.ncols() {
            return Err(LossError::LabelMismatch {
                batch: batch.ncols(),
                labels: labels.len(),
            });
        }
        if lambda <= 0.0 {
            return Err(LossError::NonPositiveRidge(lambda));
        }
        if mu < 0.0 {
            return Err(LossError::NegativeMask(mu));
        }
        Ok(MaskedRidgeProblem {
            batch,
            labels,
            lambda,
            mu,
        })
    }

    pub fn batch(&self) -> &DMatrix<f64> {
        &self.batch
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `M_ij = 1` iff samples `i` and `j` share a class (unit diagonal).
    pub fn mask(&self) -> DMatrix<f64> {
        let n = self.labels.len();
        DMatrix::from_fn(n, n, |i, j| {
            if self.labels[i] == self.labels[j] {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Objective value of a candidate coefficient matrix.
    pub fn objective(&self, c: &DMatrix<f64>) -> f64 {
        let recon = (&self.batch - &self.batch * c).norm_squared();
        let ridge = self.lambda * c.norm_squared();
        let mut masked = 0.0;
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                if self.labels[i] != self.labels[j] {
                    masked += c[(i, j)] * c[(i, j)];
                }
            }
        }
        recon + ridge + self.mu * masked
    }
}

/// Column-wise closed-form minimizer of the masked ridge objective.
///
/// Column `i` solves `(Z_{-i}^T Z_{-i} + lambda I + mu D_i) c = Z_{-i}^T z_i`
/// over the other samples, where `D_i` marks cross-class positions; the
/// diagonal of the result is exactly zero because column `i` never enters
/// its own design matrix.
pub fn masked_ridge_solve(problem: &MaskedRidgeProblem) -> DMatrix<f64> {
    let z = &problem.batch;
    let n = z.ncols();
    let mut c = DMatrix::zeros(n, n);
    if n == 1 {
        return c;
    }
    let gram = z.transpose() * z;
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let m = others.len();
        let mut system = DMatrix::zeros(m, m);
        for (a, &ja) in others.iter().enumerate() {
            for (b, &jb) in others.iter().enumerate() {
                system[(a, b)] = gram[(ja, jb)];
            }
            system[(a, a)] += problem.lambda;
            if problem.labels[ja] != problem.labels[i] {
                system[(a, a)] += problem.mu;
            }
        }
        let rhs = DVector::from_fn(m, |a, _| gram[(others[a], i)]);
        let solution = Cholesky::new(system)
            .expect("lambda > 0 makes the system positive definite")
            .solve(&rhs);
        for (a, &ja) in others.iter().enumerate() {
            c[(ja, i)] = solution[a];
        }
    }
    c
}

/// `|| Z - Z C ||_F^2`.
pub fn se_loss(batch: &DMatrix<f64>, coefficients: &DMatrix<f64>) -> f64 {
    for i in 0..coefficients.nrows().min(coefficients.ncols()) {
        debug_assert_eq!(coefficients[(i, i)], 0.0, "coefficient diagonal must be zero");
    }
    (batch - batch * coefficients).norm_squared()
}

/// Frobenius norm of the cross-class coefficient block `(1 - M) . C`.
pub fn cross_class_leakage_norm(coefficients: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..coefficients.nrows() {
        for j in 0..coefficients.ncols() {
            if labels[i] != labels[j] {
                total += coefficients[(i, j)] * coefficients[(i, j)];
            }
        }
    }
    total.sqrt()
}

/// Population standard deviation of each batch row (coordinate).
pub fn row_stds(batch: &DMatrix<f64>) -> DVector<f64> {
    let n = batch.ncols() as f64;
    DVector::from_fn(batch.nrows(), |row, _| {
        let mut mean = 0.0;
        for j in 0..batch.ncols() {
            mean += batch[(row, j)];
        }
        mean /= n;
        let mut var = 0.0;
        for j in 0..batch.ncols() {
            let d = batch[(row, j)] - mean;
            var += d * d;
        }
        (var / n).sqrt()
    })
}

/// Hinge on the per-coordinate standard-deviation floor `c / sqrt(p)`,
/// averaged over the `p` coordinates.
pub fn variance_anchor_loss(batch: &DMatrix<f64>, anchor_c: f64) -> f64 {
    let p = batch.nrows();
    let floor = anchor_c / (p as f64).sqrt();
    let stds = row_stds(batch);
    stds.iter().map(|&s| (floor - s).max(0.0)).sum::<f64>() / p as f64
}

/// Centered per-class top-d bases for every class with at least two samples
/// and a nonzero centered spectrum, in ascending class order.
pub fn repulsion_bases(
    batch: &DMatrix<f64>,
    labels: &[usize],
    dim: usize,
    drop_top: bool,
) -> Result<Vec<SubspaceBasis>, LossError> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut bases = Vec::new();
    for &class in &classes {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            continue;
        }
        let mut m = DMatrix::zeros(batch.nrows(), idx.len());
        for (j, &i) in idx.iter().enumerate() {
            m.set_column(j, &batch.column(i));
        }
        let basis = span_basis(
            &m,
            BasisMode::Centered {
                dim: Some(dim),
                drop_top,
            },
            class,
        )?;
        if basis.dim() > 0 {
            bases.push(basis);
        }
    }
    Ok(bases)
}

/// Mean squared-Frobenius coherence over defined class-basis pairs; zero
/// (with a flag) when fewer than two bases are defined.
pub fn repulsion_loss(
    batch: &DMatrix<f64>,
    labels: &[usize],
    dim: usize,
    drop_top: bool,
) -> Result<(f64, bool), LossError> {
    let bases = repulsion_bases(batch, labels, dim, drop_top)?;
    if bases.len() < 2 {
        return Ok((0.0, true));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for k in 0..bases.len() {
        for l in (k + 1)..bases.len() {
            total += (bases[k].matrix().transpose() * bases[l].matrix()).norm_squared();
            pairs += 1;
        }
    }
    Ok((total / pairs as f64, false))
}

/// All loss components of one batch plus their weighted total.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryLossReport {
    pub se_loss: f64,
    pub anchor_loss: f64,
    pub repulsion_loss: f64,
    pub total: f64,
    pub lambda_se: f64,
    pub beta_anchor: f64,
    pub lambda_rep: f64,
    pub anchor_c: f64,
    pub rep_dim: usize,
    /// Set when no class pair was defined for the repulsion term.
    pub repulsion_undefined: bool,
}

/// Evaluates the full objective on one batch of unit-norm embeddings.
pub fn total_geometry_loss(
    batch: &DMatrix<f64>,
    labels: &[usize],
    config: &GeometryConfig,
) -> Result<GeometryLossReport, LossError> {
    let problem = MaskedRidgeProblem::new(
        batch.clone(),
        labels.to_vec(),
        config.inner_lambda,
        config.inner_mu,
    )?;
    let coefficients = masked_ridge_solve(&problem);
    let se = se_loss(batch, &coefficients);
    let anchor = variance_anchor_loss(batch, config.anchor_c);
    let (repulsion, undefined) =
        repulsion_loss(batch, labels, config.rep_dim, config.rep_drop_top)?;
    let total = config.lambda_se * se + config.beta_anchor * anchor + config.lambda_rep * repulsion;
    Ok(GeometryLossReport {
        se_loss: se,
        anchor_loss: anchor,
        repulsion_loss: repulsion,
        total,
        lambda_se: config.lambda_se,
        beta_anchor: config.beta_anchor,
        lambda_rep: config.lambda_rep,
        anchor_c: config.anchor_c,
        rep_dim: config.rep_dim,
        repulsion_undefined: undefined,
    })
}
