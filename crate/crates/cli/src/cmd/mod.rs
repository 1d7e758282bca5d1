pub mod classify;
pub mod diagnose;
pub mod generate;
pub mod sweep;
pub mod train;
pub mod verify;

use srcgeo_core::data::LabeledEmbeddingSet;
use srcgeo_core::metrics::effective_rank;
use srcgeo_core::span::{span_basis, BasisMode, SubspaceBasis};

/// Default diagnostic subspace dimension: the smallest available centered
/// rank over classes with at least two samples.
pub fn default_diag_dim(set: &LabeledEmbeddingSet) -> Result<usize, String> {
    let mut minimum: Option<usize> = None;
    for class in 1..=set.class_count() {
        let matrix = set.class_matrix(class);
        if matrix.ncols() < 2 {
            continue;
        }
        let basis = span_basis(
            &matrix,
            BasisMode::Centered {
                dim: None,
                drop_top: false,
            },
            class,
        )
        .map_err(|e| e.to_string())?;
        if basis.dim() == 0 {
            continue;
        }
        minimum = Some(minimum.map_or(basis.dim(), |m| m.min(basis.dim())));
    }
    minimum.ok_or_else(|| "no class has two or more samples with nonzero spread".to_string())
}

/// Centered top-d bases for every class with at least two samples.
pub fn centered_bases(
    set: &LabeledEmbeddingSet,
    dim: usize,
) -> Result<Vec<SubspaceBasis>, String> {
    let mut bases = Vec::new();
    for class in 1..=set.class_count() {
        let matrix = set.class_matrix(class);
        if matrix.ncols() < 2 {
            continue;
        }
        let basis = span_basis(
            &matrix,
            BasisMode::Centered {
                dim: Some(dim),
                drop_top: false,
            },
            class,
        )
        .map_err(|e| e.to_string())?;
        if basis.dim() > 0 {
            bases.push(basis);
        }
    }
    Ok(bases)
}

/// Mean entropy effective rank over classes with at least two samples.
pub fn mean_effective_rank(set: &LabeledEmbeddingSet) -> Result<f64, String> {
    let mut total = 0.0;
    let mut count = 0usize;
    for class in 1..=set.class_count() {
        let matrix = set.class_matrix(class);
        if matrix.ncols() < 2 {
            continue;
        }
        total += effective_rank(&matrix).map_err(|e| e.to_string())?;
        count += 1;
    }
    if count == 0 {
        return Err("no class has two or more samples".to_string());
    }
    Ok(total / count as f64)
}
