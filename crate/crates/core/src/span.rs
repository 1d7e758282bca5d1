//! Class-span geometry: orthonormal bases, projection residuals, span
//! margins, principal angles, and projector distances.
//!
//! All subspaces are represented by `p x d` matrices with orthonormal
//! columns. Bases come in two flavours: the uncentered column span of a
//! class matrix (used by the residual idealization) and the centered top-d
//! principal directions (used by the diagnostics and the repulsion loss).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::svd::thin_svd;

/// Relative singular-value threshold for numerical rank decisions.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Ambient dimension above which projector distances are computed from the
/// principal-angle spectrum instead of the explicit `p x p` difference.
const EXPLICIT_PROJECTOR_LIMIT: usize = 512;

#[derive(Debug, Error)]
pub enum SpanError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("centered basis needs at least 2 samples, got {0}")]
    DegenerateCentering(usize),
    #[error("need at least {needed} bases, got {got}")]
    TooFewBases { needed: usize, got: usize },
}

/// How a class-span basis was extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    /// Orthonormal basis of the raw column space at numerical rank.
    Uncentered,
    /// Subtract the class mean, keep top-d principal directions.
    Centered {
        /// Requested dimension; `None` keeps every direction at numerical rank.
        dim: Option<usize>,
        /// Skip the leading singular direction before taking `dim` columns.
        drop_top: bool,
    },
}

/// Orthonormal basis for one class span, with extraction provenance.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
    pub class_id: usize,
    pub mode: BasisMode,
    /// Set when the requested dimension exceeded the available rank.
    pub truncated: bool,
}

impl SubspaceBasis {
    /// Wraps a matrix already known to have orthonormal columns.
    pub fn from_orthonormal(basis: DMatrix<f64>, class_id: usize, mode: BasisMode) -> Self {
        Self {
            basis,
            class_id,
            mode,
            truncated: false,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Ambient dimension `p`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension `d`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `|| U^T U - I ||_F`; at most 1e-10 for any basis built here.
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.basis.ncols();
        (self.basis.transpose() * &self.basis - DMatrix::<f64>::identity(d, d)).norm()
    }

    /// Projects `z` onto the span.
    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * z)
    }
}

/// Number of singular values above `RANK_REL_TOL` relative to the largest.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > RANK_REL_TOL * max).count()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    thin_svd(m).sigma_max()
}

/// Subtracts the mean column from every column.
pub fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let mean = m.column_sum() / n as f64;
    let mut out = m.clone();
    for j in 0..n {
        let mut col = out.column_mut(j);
        col -= &mean;
    }
    out
}

/// Extracts an orthonormal class-span basis from a `p x n_k` class matrix.
///
/// Uncentered mode keeps exactly the numerical rank of the column space.
/// Centered mode subtracts the class mean and keeps the top-d principal
/// directions (optionally skipping the leading one); if fewer directions are
/// available than requested the basis is truncated and flagged.
pub fn span_basis(
    class_matrix: &DMatrix<f64>,
    mode: BasisMode,
    class_id: usize,
) -> Result<SubspaceBasis, SpanError> {
    if class_matrix.ncols() == 0 {
        return Err(SpanError::Dimension("class matrix has no columns".into()));
    }
    let (work, requested, drop_top) = match mode {
        BasisMode::Uncentered => (class_matrix.clone(), None, false),
        BasisMode::Centered { dim, drop_top } => {
            if class_matrix.ncols() < 2 {
                return Err(SpanError::DegenerateCentering(class_matrix.ncols()));
            }
            (center_columns(class_matrix), dim, drop_top)
        }
    };
    let svd = thin_svd(&work);
    let rank = numerical_rank(&svd.singular_values);

    let start = if drop_top { 1.min(rank) } else { 0 };
    let available = rank - start;
    let take = requested.map_or(available, |d| d.min(available));
    let truncated = requested.is_some_and(|d| d > available);

    let basis = svd.u.columns(start, take).into_owned();
    Ok(SubspaceBasis {
        basis,
        class_id,
        mode,
        truncated,
    })
}

/// Distance from `z` to the span: `|| z - U (U^T z) ||_2`.
pub fn subspace_residual(target: &DVector<f64>, basis: &SubspaceBasis) -> f64 {
    if basis.dim() == 0 {
        return target.norm();
    }
    (target - basis.project(target)).norm()
}

/// Span residuals, their gap, and the argmin class over a basis family.
#[derive(Debug, Clone)]
pub struct SpanMargin {
    /// Second-smallest minus smallest span residual; always >= 0.
    pub margin: f64,
    /// Index into the basis slice attaining the minimum (lowest index on ties).
    pub best_index: usize,
    /// Residual per basis, in input order.
    pub residuals: Vec<f64>,
}

/// Sorted-gap span margin over at least two bases.
pub fn span_margin(
    target: &DVector<f64>,
    bases: &[SubspaceBasis],
) -> Result<SpanMargin, SpanError> {
    if bases.len() < 2 {
        return Err(SpanError::TooFewBases {
            needed: 2,
            got: bases.len(),
        });
    }
    let residuals: Vec<f64> = bases.iter().map(|b| subspace_residual(target, b)).collect();
    let mut best_index = 0;
    for (i, &r) in residuals.iter().enumerate() {
        if r < residuals[best_index] {
            best_index = i;
        }
    }
    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("residuals are finite"));
    Ok(SpanMargin {
        margin: sorted[1] - sorted[0],
        best_index,
        residuals,
    })
}

/// Principal angles between two subspaces, ascending, in `[0, pi/2]`.
#[derive(Debug, Clone)]
pub struct AngleSpectrum {
    angles: Vec<f64>,
}

impl AngleSpectrum {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Smallest principal angle; `None` when either subspace is trivial.
    pub fn theta_min(&self) -> Option<f64> {
        self.angles.first().copied()
    }

    pub fn theta_max(&self) -> Option<f64> {
        self.angles.last().copied()
    }
}

/// Principal angles via the singular values of `U^T V`, clamped to `[0, 1]`
/// before `acos`.
pub fn principal_angles(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<AngleSpectrum, SpanError> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(SpanError::Dimension(format!(
            "ambient dims differ: {} vs {}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    let product = u.matrix().transpose() * v.matrix();
    if product.nrows() == 0 || product.ncols() == 0 {
        return Ok(AngleSpectrum { angles: Vec::new() });
    }
    // singular values come sorted descending, so acos yields ascending angles
    let angles = thin_svd(&product)
        .singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect();
    Ok(AngleSpectrum { angles })
}

/// Spectral norm of the projector difference `|| P_U - P_V ||_2`.
///
/// Equals the sine of the largest principal angle when the subspaces have
/// equal dimension, and 1 otherwise. The explicit `p x p` difference is only
/// formed for moderate ambient dimensions.
pub fn projector_distance(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64, SpanError> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(SpanError::Dimension(format!(
            "ambient dims differ: {} vs {}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    let p = u.ambient_dim();
    if p <= EXPLICIT_PROJECTOR_LIMIT {
        let pu = u.matrix() * u.matrix().transpose();
        let pv = v.matrix() * v.matrix().transpose();
        return Ok(spectral_norm(&(pu - pv)));
    }
    if u.dim() != v.dim() {
        return Ok(if u.dim() == 0 && v.dim() == 0 { 0.0 } else { 1.0 });
    }
    if u.dim() == 0 {
        return Ok(0.0);
    }
    let spectrum = principal_angles(u, v)?;
    Ok(spectrum.theta_max().map_or(0.0, f64::sin))
}
