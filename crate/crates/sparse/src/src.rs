//! Fixed residual decision rule on frozen embeddings.
//!
//! A global sparse code is computed once over the whole dictionary; class
//! residuals are obtained by zeroing all coefficients outside one class and
//! measuring the reconstruction gap. Prediction is the residual argmin, and
//! the top-2 margin is the stability certificate for that argmin.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use srcgeo_core::data::{ClassPartition, LabeledEmbeddingSet, ZERO_NORM_TOL};
use srcgeo_core::span::{span_basis, subspace_residual, BasisMode, SubspaceBasis};

use crate::omp::{min_norm_lstsq, omp, OmpError, SparseCode, DEFAULT_STOP_TOL};

/// Enumeration cap for the exact in-class sparse residual.
pub const EXACT_ENUMERATION_CAP: u128 = 100_000;

#[derive(Debug, Error)]
pub enum SrcError {
    #[error(transparent)]
    Omp(#[from] OmpError),
    #[error("dimension mismatch: dictionary p = {dict}, test p = {test}")]
    DimensionMismatch { dict: usize, test: usize },
    #[error("class id {class} outside 1..={count}")]
    ClassOutOfRange { class: usize, count: usize },
    #[error(
        "exact enumeration of {combinations} supports exceeds cap {cap}; use the greedy mode"
    )]
    EnumerationBudget { combinations: u128, cap: u128 },
    #[error("test column {column} is degenerate (norm {norm:.3e})")]
    DegenerateTestColumn { column: usize, norm: f64 },
}

/// Per-class residuals of one test point plus the argmin decision.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ResidualProfile {
    /// `r_k` for contiguous class ids `1..=K` (index `k - 1`).
    pub residuals: Vec<f64>,
    /// Argmin class id; lowest id on exact ties.
    pub predicted_label: usize,
    /// Second-smallest minus smallest residual; always >= 0.
    pub margin_top2: f64,
    /// Set when the minimum is attained by more than one class.
    pub tie_flag: bool,
}

impl ResidualProfile {
    /// Builds the profile from raw residuals (argmin, margin, tie detection).
    pub fn from_residuals(residuals: Vec<f64>) -> Self {
        assert!(!residuals.is_empty());
        let mut best = 0;
        for (i, &r) in residuals.iter().enumerate() {
            if r < residuals[best] {
                best = i;
            }
        }
        let ties = residuals.iter().filter(|&&r| r == residuals[best]).count();
        let margin_top2 = if residuals.len() == 1 {
            0.0
        } else {
            let mut sorted = residuals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
            sorted[1] - sorted[0]
        };
        ResidualProfile {
            residuals,
            predicted_label: best + 1,
            margin_top2,
            tie_flag: ties > 1,
        }
    }
}

/// Global reconstruction error and cross-class leakage of a sparse code,
/// relative to a known true class.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LeakageDecomposition {
    /// `|| z - Z c ||`: how well the full code reconstructs the target.
    pub eta_rec: f64,
    /// `|| Z_{-y} c_{-y} ||`: mass carried by wrong-class atoms.
    pub eta_leak: f64,
    /// Class-restricted residual of the true class.
    pub true_class_residual: f64,
}

fn reconstruction(
    dictionary: &LabeledEmbeddingSet,
    code: &SparseCode,
    keep: impl Fn(usize) -> bool,
) -> DVector<f64> {
    let mut recon = DVector::zeros(dictionary.dim());
    for (&idx, &coeff) in code.support.iter().zip(&code.coefficients) {
        if keep(idx) {
            recon += dictionary.embeddings().column(idx) * coeff;
        }
    }
    recon
}

/// Residuals `r_k = || z - Z delta_k(c) ||` for every class, with argmin
/// prediction and top-2 margin. Classes with no support mass reconstruct the
/// zero vector, so their residual is `||z||`.
pub fn class_restricted_residuals(
    dictionary: &LabeledEmbeddingSet,
    partition: &ClassPartition,
    code: &SparseCode,
    target: &DVector<f64>,
) -> ResidualProfile {
    let k = partition.class_count();
    let mut residuals = Vec::with_capacity(k);
    for class in 1..=k {
        let recon = reconstruction(dictionary, code, |idx| dictionary.label(idx) == class);
        residuals.push((target - recon).norm());
    }
    ResidualProfile::from_residuals(residuals)
}

/// Argmin label plus the strict stability certificate `margin > 2 eta`.
pub fn src_predict(profile: &ResidualProfile, eta: f64) -> (usize, bool) {
    (profile.predicted_label, profile.margin_top2 > 2.0 * eta)
}

/// Splits the code's reconstruction into global error and wrong-class
/// leakage. The true-class residual never exceeds their sum.
pub fn leakage_decomposition(
    dictionary: &LabeledEmbeddingSet,
    code: &SparseCode,
    target: &DVector<f64>,
    true_label: usize,
) -> Result<LeakageDecomposition, SrcError> {
    if true_label == 0 || true_label > dictionary.class_count() {
        return Err(SrcError::ClassOutOfRange {
            class: true_label,
            count: dictionary.class_count(),
        });
    }
    let full = reconstruction(dictionary, code, |_| true);
    let wrong = reconstruction(dictionary, code, |idx| dictionary.label(idx) != true_label);
    let own = reconstruction(dictionary, code, |idx| dictionary.label(idx) == true_label);
    let eta_rec = (target - full).norm();
    let eta_leak = wrong.norm();
    let true_class_residual = (target - own).norm();
    assert!(
        true_class_residual <= eta_rec + eta_leak + 1e-9,
        "true-class residual bound violated: {true_class_residual} > {eta_rec} + {eta_leak}"
    );
    Ok(LeakageDecomposition {
        eta_rec,
        eta_leak,
        true_class_residual,
    })
}

/// How to evaluate the best in-class `s`-sparse residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseResidualMode {
    /// Enumerate every in-class support (exact minimum, capped).
    Exact,
    /// Pursuit restricted to in-class atoms (upper bound).
    Greedy,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if result > EXACT_ENUMERATION_CAP * 1000 {
            return u128::MAX;
        }
    }
    result
}

/// Best residual over supports contained in class `y` with at most `s`
/// atoms.
///
/// The least-squares residual is non-increasing under support growth, so the
/// exact mode only needs supports of size exactly `min(s, |I_y|)`.
pub fn class_restricted_sparse_residual(
    dictionary: &LabeledEmbeddingSet,
    partition: &ClassPartition,
    target: &DVector<f64>,
    class: usize,
    budget: usize,
    mode: SparseResidualMode,
) -> Result<f64, SrcError> {
    if class == 0 || class > partition.class_count() {
        return Err(SrcError::ClassOutOfRange {
            class,
            count: partition.class_count(),
        });
    }
    let indices = partition.class(class);
    if indices.is_empty() {
        return Ok(target.norm());
    }
    match mode {
        SparseResidualMode::Exact => {
            let m = budget.min(indices.len());
            let combinations = binomial(indices.len(), m);
            if combinations > EXACT_ENUMERATION_CAP {
                return Err(SrcError::EnumerationBudget {
                    combinations,
                    cap: EXACT_ENUMERATION_CAP,
                });
            }
            let mut best = f64::INFINITY;
            let mut selector: Vec<usize> = (0..m).collect();
            loop {
                let support: Vec<usize> = selector.iter().map(|&i| indices[i]).collect();
                let sub = {
                    let mut s = DMatrix::zeros(dictionary.dim(), support.len());
                    for (j, &i) in support.iter().enumerate() {
                        s.set_column(j, &dictionary.embeddings().column(i));
                    }
                    s
                };
                let (c, _) = min_norm_lstsq(&sub, target);
                best = best.min((target - sub * c).norm());
                if !advance_combination(&mut selector, indices.len()) {
                    break;
                }
            }
            Ok(best)
        }
        SparseResidualMode::Greedy => {
            let mut sub = DMatrix::zeros(dictionary.dim(), indices.len());
            for (j, &i) in indices.iter().enumerate() {
                sub.set_column(j, &dictionary.embeddings().column(i));
            }
            let capped = budget.min(indices.len()).min(dictionary.dim());
            let code = omp(&sub, target, capped, DEFAULT_STOP_TOL)?;
            Ok(code.final_residual_norm)
        }
    }
}

/// Advances a lexicographic combination of `len` items; false when done.
fn advance_combination(selector: &mut [usize], n: usize) -> bool {
    let m = selector.len();
    if m == 0 {
        return false;
    }
    let mut i = m;
    while i > 0 {
        i -= 1;
        if selector[i] < n - (m - i) {
            selector[i] += 1;
            for j in (i + 1)..m {
                selector[j] = selector[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A single inference run: normalize, code globally, restrict per class.
pub fn classify_point(
    dictionary: &LabeledEmbeddingSet,
    partition: &ClassPartition,
    target: &DVector<f64>,
    budget: usize,
) -> Result<(SparseCode, ResidualProfile), SrcError> {
    let norm = target.norm();
    if norm <= ZERO_NORM_TOL {
        return Err(SrcError::DegenerateTestColumn { column: 0, norm });
    }
    let z = target / norm;
    let code = omp(dictionary.embeddings(), &z, budget, DEFAULT_STOP_TOL)?;
    let profile = class_restricted_residuals(dictionary, partition, &code, &z);
    Ok((code, profile))
}

/// Dataset-level evaluation under the fixed residual rule.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    /// Mean per-class recall over classes that appear in the test set.
    pub balanced_accuracy: f64,
    pub margin_mean: f64,
    pub margin_median: f64,
    /// Recall per report class; `None` for classes with no test samples.
    pub per_class_recall: Vec<Option<f64>>,
    /// Rows: true class, columns: predicted class (report class order).
    pub confusion: Vec<Vec<usize>>,
    /// Original labels for report classes: dictionary classes first, then
    /// labels seen only in the test set.
    pub class_labels: Vec<i64>,
    pub dictionary_class_count: usize,
    /// Labels present in the test set but absent from the dictionary; such
    /// points are counted as always wrong.
    pub unknown_test_labels: Vec<i64>,
    pub n_test: usize,
}

/// Runs the fixed inference rule on every test column and aggregates the
/// confusion matrix, accuracy, balanced accuracy, and margin statistics.
///
/// Test embeddings are normalized before coding. Every run re-checks the
/// one-sided domination of class-restricted residuals over span residuals;
/// a violation is an implementation bug and panics.
pub fn evaluate(
    dictionary: &LabeledEmbeddingSet,
    test_set: &LabeledEmbeddingSet,
    budget: usize,
) -> Result<EvaluationReport, SrcError> {
    if dictionary.dim() != test_set.dim() {
        return Err(SrcError::DimensionMismatch {
            dict: dictionary.dim(),
            test: test_set.dim(),
        });
    }
    let partition = srcgeo_core::data::partition_by_class(dictionary);
    let k_dict = dictionary.class_count();

    let span_bases: Vec<SubspaceBasis> = (1..=k_dict)
        .map(|k| {
            span_basis(&dictionary.class_matrix(k), BasisMode::Uncentered, k)
                .expect("non-empty class matrix")
        })
        .collect();

    // report classes: dictionary classes, then test-only originals
    let mut class_labels: Vec<i64> = dictionary.original_labels().to_vec();
    let mut unknown_test_labels: Vec<i64> = Vec::new();
    for &orig in test_set.original_labels() {
        if !class_labels.contains(&orig) {
            class_labels.push(orig);
            unknown_test_labels.push(orig);
        }
    }
    let k_total = class_labels.len();
    let report_class_of = |orig: i64| -> usize {
        class_labels.iter().position(|&l| l == orig).expect("label registered") + 1
    };

    let mut confusion = vec![vec![0usize; k_total]; k_total];
    let mut margins = Vec::with_capacity(test_set.len());

    for j in 0..test_set.len() {
        let raw = test_set.column(j);
        let norm = raw.norm();
        if norm <= ZERO_NORM_TOL {
            return Err(SrcError::DegenerateTestColumn { column: j, norm });
        }
        let z = raw / norm;
        let code = omp(dictionary.embeddings(), &z, budget, DEFAULT_STOP_TOL)?;
        let profile = class_restricted_residuals(dictionary, &partition, &code, &z);

        for class in 1..=k_dict {
            let sub = subspace_residual(&z, &span_bases[class - 1]);
            assert!(
                profile.residuals[class - 1] >= sub - 1e-9,
                "span residual domination violated for class {class}: {} < {sub}",
                profile.residuals[class - 1]
            );
        }

        let true_report = report_class_of(test_set.original_label(test_set.label(j)));
        let pred_report = report_class_of(dictionary.original_label(profile.predicted_label));
        confusion[true_report - 1][pred_report - 1] += 1;
        margins.push(profile.margin_top2);
    }

    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = (0..k_total).map(|i| confusion[i][i]).sum();
    let accuracy = trace as f64 / total as f64;

    let mut per_class_recall = Vec::with_capacity(k_total);
    let mut recall_sum = 0.0;
    let mut recall_count = 0usize;
    for (i, row) in confusion.iter().enumerate() {
        let row_total: usize = row.iter().sum();
        if row_total == 0 {
            per_class_recall.push(None);
        } else {
            let recall = row[i] as f64 / row_total as f64;
            per_class_recall.push(Some(recall));
            recall_sum += recall;
            recall_count += 1;
        }
    }
    let balanced_accuracy = recall_sum / recall_count as f64;

    let margin_mean = margins.iter().sum::<f64>() / margins.len() as f64;
    let mut sorted = margins.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite margins"));
    let margin_median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };

    Ok(EvaluationReport {
        accuracy,
        balanced_accuracy,
        margin_mean,
        margin_median,
        per_class_recall,
        confusion,
        class_labels,
        dictionary_class_count: k_dict,
        unknown_test_labels,
        n_test: test_set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_axes() -> (LabeledEmbeddingSet, ClassPartition) {
        let m = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ]);
        let set = LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap();
        let part = srcgeo_core::data::partition_by_class(&set);
        (set, part)
    }

    #[test]
    fn restriction_zeroes_off_class_mass() {
        let (set, part) = two_class_axes();
        let target = DVector::from_vec(vec![1.0, 0.0]);
        let code = omp(set.embeddings(), &target, 1, 0.0).unwrap();
        let profile = class_restricted_residuals(&set, &part, &code, &target);
        assert!(profile.residuals[0] <= 1e-15);
        assert!((profile.residuals[1] - 1.0).abs() <= 1e-15);
        assert_eq!(profile.predicted_label, 1);
        assert!((profile.margin_top2 - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn all_zero_code_ties_to_lowest_class() {
        let (set, part) = two_class_axes();
        let target = DVector::from_vec(vec![0.6, 0.8]);
        let code = SparseCode {
            support: vec![],
            coefficients: vec![],
            final_residual_norm: 1.0,
            iterations: 0,
            rank_deficient: false,
        };
        let profile = class_restricted_residuals(&set, &part, &code, &target);
        assert!(profile.tie_flag);
        assert_eq!(profile.predicted_label, 1);
        assert!((profile.residuals[0] - 1.0).abs() <= 1e-15);
        assert!(profile.margin_top2.abs() <= 1e-15);
    }

    #[test]
    fn hand_run_on_orthonormal_pair() {
        let (set, part) = two_class_axes();
        let target = DVector::from_vec(vec![0.6, 0.8]);
        let code = omp(set.embeddings(), &target, 2, 0.0).unwrap();
        let profile = class_restricted_residuals(&set, &part, &code, &target);
        assert!((profile.residuals[0] - 0.8).abs() <= 1e-12);
        assert!((profile.residuals[1] - 0.6).abs() <= 1e-12);
        assert_eq!(profile.predicted_label, 2);
        assert!((profile.margin_top2 - 0.2).abs() <= 1e-12);
    }

    #[test]
    fn predict_uses_strict_margin_test() {
        let p = ResidualProfile::from_residuals(vec![0.1, 0.5, 0.9]);
        assert_eq!(src_predict(&p, 0.1), (1, true));

        let tie = ResidualProfile::from_residuals(vec![0.3, 0.3]);
        assert_eq!(src_predict(&tie, 0.0), (1, false));
        assert!(tie.tie_flag);

        let boundary = ResidualProfile::from_residuals(vec![0.2, 0.7]);
        // margin 0.5 is not strictly greater than 2 * 0.25
        assert_eq!(src_predict(&boundary, 0.25), (1, false));
    }

    #[test]
    fn leakage_vanishes_for_in_class_codes() {
        let (set, _part) = two_class_axes();
        let target = DVector::from_vec(vec![0.6, 0.8]);
        let code = SparseCode {
            support: vec![0],
            coefficients: vec![0.6],
            final_residual_norm: 0.8,
            iterations: 1,
            rank_deficient: false,
        };
        let d = leakage_decomposition(&set, &code, &target, 1).unwrap();
        assert_eq!(d.eta_leak, 0.0);
        assert!((d.eta_rec - d.true_class_residual).abs() <= 1e-15);
    }

    #[test]
    fn wrong_class_reconstruction_is_pure_leakage() {
        let (set, _part) = two_class_axes();
        let target = DVector::from_vec(vec![0.0, 1.0]);
        // exact reconstruction using only the class-2 atom, true class 1
        let code = SparseCode {
            support: vec![1],
            coefficients: vec![1.0],
            final_residual_norm: 0.0,
            iterations: 1,
            rank_deficient: false,
        };
        let d = leakage_decomposition(&set, &code, &target, 1).unwrap();
        assert!(d.eta_rec <= 1e-15);
        assert!((d.eta_leak - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn exact_sparse_residual_zero_inside_class_span() {
        let m = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ]);
        let set = LabeledEmbeddingSet::from_raw_labels(m, &[1, 1, 2]).unwrap();
        let part = srcgeo_core::data::partition_by_class(&set);
        let target = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let r = class_restricted_sparse_residual(
            &set,
            &part,
            &target,
            1,
            2,
            SparseResidualMode::Exact,
        )
        .unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn enumeration_cap_suggests_greedy() {
        let n = 60;
        let mut m = DMatrix::zeros(40, n);
        for j in 0..n {
            m[(j % 40, j)] = 1.0;
        }
        let set = LabeledEmbeddingSet::from_raw_labels(m, &vec![1i64; n]).unwrap();
        let part = srcgeo_core::data::partition_by_class(&set);
        let target = DVector::from_fn(40, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let err = class_restricted_sparse_residual(
            &set,
            &part,
            &target,
            1,
            10,
            SparseResidualMode::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, SrcError::EnumerationBudget { .. }));
    }

    #[test]
    fn balanced_accuracy_is_mean_recall() {
        // 2 classes: class 1 recall 1.0 (2/2), class 2 recall 0.5 (1/2)
        let dict = {
            let m = DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ]);
            LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap()
        };
        let test = {
            let m = DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
                DVector::from_vec(vec![1.0, 0.001]),
            ]);
            LabeledEmbeddingSet::from_raw_labels(m, &[1, 1, 2, 2]).unwrap()
        };
        let report = evaluate(&dict, &test, 1).unwrap();
        assert!((report.balanced_accuracy - 0.75).abs() <= 1e-15);
        assert!((report.accuracy - 0.75).abs() <= 1e-15);
        assert_eq!(report.per_class_recall[0], Some(1.0));
        assert_eq!(report.per_class_recall[1], Some(0.5));
    }

    #[test]
    fn perfect_predictions_report_unity() {
        let dict = {
            let m = DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ]);
            LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap()
        };
        let report = evaluate(&dict, &dict, 1).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.balanced_accuracy, 1.0);
    }

    #[test]
    fn unknown_test_class_counts_as_wrong() {
        let dict = {
            let m = DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ]);
            LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap()
        };
        let test = {
            let m = DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.5, 0.5]),
            ]);
            LabeledEmbeddingSet::from_raw_labels(m, &[1, 99]).unwrap()
        };
        let report = evaluate(&dict, &test, 1).unwrap();
        assert_eq!(report.unknown_test_labels, vec![99]);
        assert!((report.accuracy - 0.5).abs() <= 1e-15);
        // the stray class occupies a report row with zero diagonal
        assert_eq!(report.per_class_recall[2], Some(0.0));
    }

    #[test]
    fn combination_walker_is_lexicographic() {
        let mut sel = vec![0usize, 1];
        let mut seen = vec![sel.clone()];
        while advance_combination(&mut sel, 4) {
            seen.push(sel.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }
}
