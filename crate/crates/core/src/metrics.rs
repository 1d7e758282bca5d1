//! Spectral diagnostics: entropy effective rank and worst-case inter-class
//! cohesion.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::span::{center_columns, numerical_rank, SubspaceBasis};
use crate::svd::singular_values;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("effective rank needs at least 2 samples for centering, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate spectrum: no nonzero singular values")]
    DegenerateSpectrum,
    #[error("cohesion needs at least 2 bases with a common nonzero dimension")]
    CohesionUndefined,
}

/// Exponential of the Shannon entropy of the normalized singular-value
/// distribution. Natural logarithm; values at or below the numerical-rank
/// floor are excluded.
pub fn effective_rank_from_spectrum(singular_values: &[f64]) -> Result<f64, MetricsError> {
    let rank = numerical_rank(singular_values);
    if rank == 0 {
        return Err(MetricsError::DegenerateSpectrum);
    }
    let mut kept: Vec<f64> = singular_values.to_vec();
    kept.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    kept.truncate(rank);
    let total: f64 = kept.iter().sum();
    let entropy: f64 = kept
        .iter()
        .map(|&s| {
            let p = s / total;
            -p * p.ln()
        })
        .sum();
    Ok(entropy.exp())
}

/// Entropy effective rank of a class matrix after per-class centering.
pub fn effective_rank(class_matrix: &DMatrix<f64>) -> Result<f64, MetricsError> {
    if class_matrix.ncols() < 2 {
        return Err(MetricsError::TooFewSamples(class_matrix.ncols()));
    }
    let centered = center_columns(class_matrix);
    effective_rank_from_spectrum(&singular_values(&centered))
}

/// Mean over unordered basis pairs of the largest singular value of
/// `U_k^T U_l`, i.e. of `cos(theta_min)`. Always in `[0, 1]`.
pub fn cohesion_max(bases: &[SubspaceBasis]) -> Result<f64, MetricsError> {
    if bases.len() < 2 || bases.iter().any(|b| b.dim() == 0) {
        return Err(MetricsError::CohesionUndefined);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for k in 0..bases.len() {
        for l in (k + 1)..bases.len() {
            let product = bases[k].matrix().transpose() * bases[l].matrix();
            let sigma_max = singular_values(&product).first().copied().unwrap_or(0.0);
            total += sigma_max.clamp(0.0, 1.0);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::BasisMode;
    use nalgebra::DVector;

    #[test]
    fn uniform_spectrum_gives_count() {
        let v = effective_rank_from_spectrum(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((v - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn single_mode_spectrum_gives_one() {
        let v = effective_rank_from_spectrum(&[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn two_one_spectrum_matches_entropy_oracle() {
        // direct evaluation: H = ln 3 - (2/3) ln 2, EffRank = exp(H)
        let expected = (3.0_f64.ln() - (2.0 / 3.0) * 2.0_f64.ln()).exp();
        let v = effective_rank_from_spectrum(&[2.0, 1.0]).unwrap();
        assert!((v - expected).abs() <= 1e-12, "{v} vs {expected}");
        assert!((expected - 1.8899).abs() < 1e-4);
    }

    #[test]
    fn all_zero_spectrum_is_degenerate() {
        assert!(matches!(
            effective_rank_from_spectrum(&[0.0, 0.0]),
            Err(MetricsError::DegenerateSpectrum)
        ));
    }

    #[test]
    fn identical_columns_center_to_zero() {
        let m = DMatrix::from_element(3, 4, 0.5);
        assert!(matches!(
            effective_rank(&m),
            Err(MetricsError::DegenerateSpectrum)
        ));
    }

    #[test]
    fn effective_rank_bounded_by_nonzero_count() {
        let v = effective_rank_from_spectrum(&[5.0, 1.0, 0.2]).unwrap();
        assert!((1.0..=3.0).contains(&v));
    }

    fn line(dir: &[f64]) -> SubspaceBasis {
        let v = DVector::from_column_slice(dir);
        let v = &v / v.norm();
        SubspaceBasis::from_orthonormal(DMatrix::from_columns(&[v]), 0, BasisMode::Uncentered)
    }

    #[test]
    fn cohesion_zero_for_orthogonal_lines() {
        let v = cohesion_max(&[line(&[1.0, 0.0]), line(&[0.0, 1.0])]).unwrap();
        assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn cohesion_one_for_identical_lines() {
        let v = cohesion_max(&[line(&[1.0, 1.0]), line(&[1.0, 1.0])]).unwrap();
        assert!((v - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn cohesion_is_cosine_of_line_angle() {
        let alpha = 0.7_f64;
        let v = cohesion_max(&[line(&[1.0, 0.0]), line(&[alpha.cos(), alpha.sin()])]).unwrap();
        assert!((v - alpha.cos()).abs() <= 1e-10);
    }
}
