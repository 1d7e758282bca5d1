//! Oracle verifiers for the stability results: each check evaluates both
//! sides of an inequality on a concrete instance and reports slack.
//!
//! Every statement verified here is proven, so a violation (beyond the 1e-9
//! floating-point allowance) is an implementation bug in the geometry or
//! pursuit code, never a finding about the mathematics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use srcgeo_core::data::{partition_by_class, LabeledEmbeddingSet};
use srcgeo_core::span::{
    principal_angles, projector_distance, span_basis, span_margin, subspace_residual, BasisMode,
    SubspaceBasis,
};
use srcgeo_core::svd::thin_svd;
use srcgeo_sparse::{class_restricted_residuals, leakage_decomposition, omp};

use crate::scenario::{
    random_rotation, random_subspace_with, random_unit_vector, sample_scenario, LabError,
    Scenario, ScenarioParams,
};

/// Allowed floating-point slack on every verified inequality.
pub const THEOREM_TOL: f64 = 1e-9;

/// Angle below which two spans are treated as intersecting. An exact shared
/// direction measures around 1.5e-8 through `acos` (cosine cannot resolve
/// smaller angles in double precision), so the gate needs headroom above
/// that; genuinely separated spans sit orders of magnitude higher.
pub const OVERLAP_ANGLE_TOL: f64 = 1e-6;

/// Outcome of one inequality check, oriented as `left >= right - tol`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem: String,
    pub left: f64,
    pub right: f64,
    pub holds: bool,
    /// `left - right`; negative slack beyond the tolerance means violation.
    pub slack: f64,
    /// False when the statement's preconditions were not met.
    pub applicable: bool,
}

impl TheoremReport {
    fn check(theorem: &str, left: f64, right: f64) -> Self {
        TheoremReport {
            theorem: theorem.to_string(),
            left,
            right,
            holds: left >= right - THEOREM_TOL,
            slack: left - right,
            applicable: true,
        }
    }

    fn inapplicable(theorem: &str) -> Self {
        TheoremReport {
            theorem: theorem.to_string(),
            left: f64::NAN,
            right: f64::NAN,
            holds: true,
            slack: f64::INFINITY,
            applicable: false,
        }
    }
}

/// Margin lower bound under coverage and separation: the span margin of the
/// constructed point is at least `gamma sin(alpha) - 2 epsilon`; when that
/// bound is positive the argmin must be uniquely the true class.
pub fn verify_margin_bound(scenario: &Scenario) -> TheoremReport {
    let margin = span_margin(&scenario.point, &scenario.bases).expect(">= 2 classes");
    let bound = scenario.gamma * scenario.alpha.sin() - 2.0 * scenario.epsilon;
    let mut report = TheoremReport::check("margin_lower_bound", margin.margin, bound);
    if bound > 0.0 {
        let unique = margin.best_index + 1 == scenario.true_class && margin.margin > 0.0;
        report.holds = report.holds && unique;
    }
    report
}

/// Repulsion-to-margin transfer: if every pairwise squared-Frobenius
/// coherence with the true span is at most `eta`, the span margin is at
/// least `gamma sqrt(1 - eta) - 2 epsilon`.
pub fn verify_repulsion_margin(scenario: &Scenario, eta: f64) -> TheoremReport {
    let y = scenario.true_class;
    for (j, basis) in scenario.bases.iter().enumerate() {
        if j + 1 == y {
            continue;
        }
        let coherence =
            (scenario.bases[y - 1].matrix().transpose() * basis.matrix()).norm_squared();
        if coherence > eta + 1e-12 {
            return TheoremReport::inapplicable("repulsion_margin");
        }
    }
    let margin = span_margin(&scenario.point, &scenario.bases).expect(">= 2 classes");
    let bound = if eta >= 1.0 {
        -2.0 * scenario.epsilon
    } else {
        scenario.gamma * (1.0 - eta).sqrt() - 2.0 * scenario.epsilon
    };
    TheoremReport::check("repulsion_margin", margin.margin, bound)
}

/// Unit direction in the intersection of two overlapping spans, with the
/// claim that its span margin vanishes.
pub fn witness_overlap(
    u_y: &SubspaceBasis,
    u_j: &SubspaceBasis,
) -> Result<(DVector<f64>, TheoremReport), LabError> {
    let spectrum = principal_angles(u_y, u_j)?;
    let theta_min = spectrum.theta_min().unwrap_or(std::f64::consts::FRAC_PI_2);
    if theta_min > OVERLAP_ANGLE_TOL {
        return Err(LabError::NoOverlap { theta_min });
    }
    let product = u_y.matrix().transpose() * u_j.matrix();
    let svd = thin_svd(&product);
    let witness = u_y.matrix() * svd.u.column(0).into_owned();
    let margin = span_margin(&witness, &[u_y.clone(), u_j.clone()])?;
    let report = TheoremReport::check("overlap_margin_collapse", 0.0, margin.margin);
    Ok((witness, report))
}

/// Neighborhood version of the overlap obstruction: every point within
/// `delta` of the intersection witness has span margin at most `2 delta`.
pub fn overlap_neighborhood(
    u_y: &SubspaceBasis,
    u_j: &SubspaceBasis,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<TheoremReport, LabError> {
    let (witness, _) = witness_overlap(u_y, u_j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = [u_y.clone(), u_j.clone()];
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let direction = random_unit_vector(witness.len(), &mut rng);
        let radius = delta * rng.gen_range(0.0..=1.0);
        let point = &witness + direction * radius;
        let margin = span_margin(&point, &bases)?;
        worst = worst.max(margin.margin);
    }
    Ok(TheoremReport::check(
        "overlap_margin_collapse",
        2.0 * delta,
        worst,
    ))
}

/// Principal direction of the first span attaining the smallest angle: its
/// own-span residual vanishes, its competing residual equals
/// `sin(theta_min)`, and its margin is at most that.
pub fn witness_small_angle(
    u_y: &SubspaceBasis,
    u_j: &SubspaceBasis,
) -> Result<(DVector<f64>, TheoremReport), LabError> {
    let product = u_y.matrix().transpose() * u_j.matrix();
    let svd = thin_svd(&product);
    let witness = u_y.matrix() * svd.u.column(0).into_owned();
    let theta_min = principal_angles(u_y, u_j)?
        .theta_min()
        .ok_or_else(|| LabError::BadParameter("trivial span".into()))?;

    let r_own = subspace_residual(&witness, u_y);
    let r_other = subspace_residual(&witness, u_j);
    let margin = span_margin(&witness, &[u_y.clone(), u_j.clone()])?;

    let mut report = TheoremReport::check("small_angle_witness", r_other, theta_min.sin());
    report.holds = report.holds
        && (r_other - theta_min.sin()).abs() <= THEOREM_TOL
        && r_own <= THEOREM_TOL
        && margin.margin <= theta_min.sin() + THEOREM_TOL;
    Ok((witness, report))
}

/// Leakage-aware transfer from the span margin to the practical margin of
/// the pursuit-plus-restriction protocol; the inequality is identity-derived
/// and must hold on every instance.
pub fn verify_transfer(
    dictionary: &LabeledEmbeddingSet,
    target: &DVector<f64>,
    true_label: usize,
    budget: usize,
) -> Result<TheoremReport, LabError> {
    let partition = partition_by_class(dictionary);
    let norm = target.norm();
    let z = target / norm;
    let code = omp(dictionary.embeddings(), &z, budget, 0.0)
        .map_err(|e| LabError::BadParameter(e.to_string()))?;
    let profile = class_restricted_residuals(dictionary, &partition, &code, &z);
    let leak = leakage_decomposition(dictionary, &code, &z, true_label)
        .map_err(|e| LabError::BadParameter(e.to_string()))?;

    let k = dictionary.class_count();
    let sub_residuals: Vec<f64> = (1..=k)
        .map(|class| {
            let basis = span_basis(&dictionary.class_matrix(class), BasisMode::Uncentered, class)
                .expect("non-empty class");
            subspace_residual(&z, &basis)
        })
        .collect();

    let y = true_label;
    let practical_margin = (1..=k)
        .filter(|&j| j != y)
        .map(|j| profile.residuals[j - 1] - profile.residuals[y - 1])
        .fold(f64::INFINITY, f64::min);
    let min_other_sub = (1..=k)
        .filter(|&j| j != y)
        .map(|j| sub_residuals[j - 1])
        .fold(f64::INFINITY, f64::min);
    let bound = min_other_sub - leak.eta_rec - leak.eta_leak;

    let mut report = TheoremReport::check("leakage_transfer", practical_margin, bound);

    // one-sided domination of practical residuals over span residuals
    for class in 1..=k {
        if profile.residuals[class - 1] < sub_residuals[class - 1] - THEOREM_TOL {
            report.holds = false;
        }
    }
    // sufficient condition: small error plus leakage forces the correct argmin
    if leak.eta_rec + leak.eta_leak < min_other_sub - THEOREM_TOL
        && profile.predicted_label != y
    {
        report.holds = false;
    }
    Ok(report)
}

/// Adds independent perturbations bounded by `eta` to each residual and
/// counts argmin flips; with margin above `2 eta` the flip count is zero.
pub fn perturbation_stability_trial(
    residuals: &[f64],
    eta: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let argmin = |values: &[f64]| -> usize {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v < values[best] {
                best = i;
            }
        }
        best
    };
    let original = argmin(residuals);
    let mut flips = 0usize;
    let mut perturbed = vec![0.0; residuals.len()];
    for _ in 0..trials {
        for (slot, &r) in perturbed.iter_mut().zip(residuals.iter()) {
            *slot = r + rng.gen_range(-eta..=eta);
        }
        if argmin(&perturbed) != original {
            flips += 1;
        }
    }
    flips as f64 / trials as f64
}

/// Aggregate of one theorem's Monte-Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub theorem: String,
    pub trials: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub parameters: serde_json::Value,
}

fn aggregate(
    theorem: &str,
    reports: Vec<TheoremReport>,
    parameters: serde_json::Value,
) -> SuiteReport {
    let applicable: Vec<&TheoremReport> = reports.iter().filter(|r| r.applicable).collect();
    let violations = applicable.iter().filter(|r| !r.holds).count();
    let min_slack = applicable
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    SuiteReport {
        theorem: theorem.to_string(),
        trials: applicable.len(),
        violations,
        min_slack,
        parameters,
    }
}

fn random_scenario(rng: &mut ChaCha8Rng, single_true_dim: bool) -> Scenario {
    let k = 4;
    let dims: Vec<usize> = (0..k)
        .map(|i| {
            if single_true_dim && i == 0 {
                1
            } else {
                rng.gen_range(1..=4usize)
            }
        })
        .collect();
    let alpha = rng.gen_range(0.05..1.5);
    let gamma = rng.gen_range(0.2..2.0);
    let epsilon = rng.gen_range(0.0..0.6 * gamma);
    let params = ScenarioParams {
        ambient_dim: 32,
        dims,
        true_class: 1,
        alpha,
        gamma,
        epsilon,
        noise_le: false,
        seed: rng.gen(),
    };
    sample_scenario(&params).expect("feasible by construction")
}

fn suite_margin_bound(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| verify_margin_bound(&random_scenario(rng, false)))
        .collect();
    aggregate(
        "margin_lower_bound",
        reports,
        json!({"ambient_dim": 32, "classes": 4, "alpha": [0.05, 1.5], "gamma": [0.2, 2.0]}),
    )
}

fn suite_repulsion_margin(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            // one-dimensional true span keeps the measured coherence below 1
            let scenario = random_scenario(rng, true);
            let y = scenario.true_class;
            let eta = scenario
                .bases
                .iter()
                .enumerate()
                .filter(|(j, _)| j + 1 != y)
                .map(|(_, b)| {
                    (scenario.bases[y - 1].matrix().transpose() * b.matrix()).norm_squared()
                })
                .fold(0.0_f64, f64::max);
            verify_repulsion_margin(&scenario, eta)
        })
        .collect();
    aggregate(
        "repulsion_margin",
        reports,
        json!({"ambient_dim": 32, "classes": 4, "true_span_dim": 1, "eta": "measured"}),
    )
}

fn suite_transfer(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let p = rng.gen_range(8..=16usize);
            let k = rng.gen_range(2..=4usize);
            let per_class = rng.gen_range(2..=5usize);
            let n = k * per_class;
            let mut m = DMatrix::zeros(p, n);
            let mut labels = Vec::with_capacity(n);
            for j in 0..n {
                m.set_column(j, &random_unit_vector(p, rng));
                labels.push((j % k + 1) as i64);
            }
            let dictionary = LabeledEmbeddingSet::from_raw_labels(m, &labels).expect("non-empty");
            // half the targets live inside the dictionary span
            let target = if rng.gen_bool(0.5) {
                let coeff = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let t = dictionary.embeddings() * coeff;
                if t.norm() > 1e-9 {
                    t
                } else {
                    random_unit_vector(p, rng)
                }
            } else {
                random_unit_vector(p, rng)
            };
            let budget = rng.gen_range(1..=p.min(n));
            let true_label = rng.gen_range(1..=k);
            verify_transfer(&dictionary, &target, true_label, budget)
                .expect("valid instance")
        })
        .collect();
    aggregate(
        "leakage_transfer",
        reports,
        json!({"ambient_dim": [8, 16], "classes": [2, 4], "per_class": [2, 5], "budget": "1..=min(p,n)"}),
    )
}

fn suite_argmin_stability(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let k = rng.gen_range(2..=6usize);
            let residuals: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mut sorted = residuals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let margin = sorted[1] - sorted[0];
            let eta = 0.5 * margin * rng.gen_range(0.0..0.95);
            let flips = perturbation_stability_trial(&residuals, eta, 20, rng.gen());
            let mut report =
                TheoremReport::check("argmin_stability", margin, 2.0 * eta);
            report.holds = report.holds && flips == 0.0;
            report
        })
        .collect();
    aggregate(
        "argmin_stability",
        reports,
        json!({"classes": [2, 6], "eta": "below margin/2", "perturbations_per_trial": 20}),
    )
}

fn suite_projector_perturbation(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let p = rng.gen_range(3..=12usize);
            let d1 = rng.gen_range(1..p);
            let d2 = rng.gen_range(1..p);
            let s = random_subspace_with(p, d1, rng);
            let s2 = random_subspace_with(p, d2, rng);
            let z = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
            let gap = (subspace_residual(&z, &s) - subspace_residual(&z, &s2)).abs();
            let bound = projector_distance(&s, &s2).expect("same ambient") * z.norm();
            TheoremReport::check("projector_perturbation", bound, gap)
        })
        .collect();
    aggregate(
        "projector_perturbation",
        reports,
        json!({"ambient_dim": [3, 12], "dims": "1..p"}),
    )
}

fn suite_lipschitz(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let p = rng.gen_range(2..=12usize);
            let d = rng.gen_range(1..p);
            let s = random_subspace_with(p, d, rng);
            let z = DVector::from_fn(p, |_, _| rng.gen_range(-2.0..2.0));
            let z2 = DVector::from_fn(p, |_, _| rng.gen_range(-2.0..2.0));
            let gap = (subspace_residual(&z, &s) - subspace_residual(&z2, &s)).abs();
            TheoremReport::check("lipschitz_distance", (&z - &z2).norm(), gap)
        })
        .collect();
    aggregate(
        "lipschitz_distance",
        reports,
        json!({"ambient_dim": [2, 12], "dims": "1..p"}),
    )
}

fn suite_small_angle(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let d = rng.gen_range(1..=4usize);
            let p = rng.gen_range(2 * d..=2 * d + 8);
            let mut angles: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0.01..std::f64::consts::FRAC_PI_2))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let (u, v) = crate::scenario::subspace_pair_with_angles(p, &angles, rng.gen())
                .expect("feasible");
            let (_, report) = witness_small_angle(&u, &v).expect("valid pair");
            report
        })
        .collect();
    aggregate(
        "small_angle_witness",
        reports,
        json!({"span_dim": [1, 4], "angles": [0.01, "pi/2"]}),
    )
}

fn suite_angle_distance(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let d = rng.gen_range(1..=4usize);
            let p = rng.gen_range(2 * d..=2 * d + 8);
            let mut angles: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0.0..std::f64::consts::FRAC_PI_2))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let (u, v) = crate::scenario::subspace_pair_with_angles(p, &angles, rng.gen())
                .expect("feasible");
            let theta_min = principal_angles(&u, &v).expect("same dim").theta_min().expect("non-trivial");
            let coeff = DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
            let s = u.matrix() * coeff;
            TheoremReport::check(
                "angle_distance_bound",
                subspace_residual(&s, &v),
                s.norm() * theta_min.sin(),
            )
        })
        .collect();
    aggregate(
        "angle_distance_bound",
        reports,
        json!({"span_dim": [1, 4], "point": "random span member"}),
    )
}

/// Pair of spans sharing a coordinate direction inside larger spans,
/// rotated; used by the overlap suite.
fn overlapping_pair(rng: &mut ChaCha8Rng) -> (SubspaceBasis, SubspaceBasis) {
    let d1 = rng.gen_range(1..=3usize);
    let d2 = rng.gen_range(1..=3usize);
    let p = d1 + d2 + rng.gen_range(1..=4usize);
    let rotation = random_rotation(p, rng);
    // both spans contain e_1; remaining directions occupy disjoint blocks
    let mut u = DMatrix::zeros(p, d1);
    u[(0, 0)] = 1.0;
    for i in 1..d1 {
        u[(i, i)] = 1.0;
    }
    let mut v = DMatrix::zeros(p, d2);
    v[(0, 0)] = 1.0;
    for i in 1..d2 {
        v[(d1 + i - 1, i)] = 1.0;
    }
    (
        SubspaceBasis::from_orthonormal(&rotation * u, 1, BasisMode::Uncentered),
        SubspaceBasis::from_orthonormal(&rotation * v, 2, BasisMode::Uncentered),
    )
}

fn suite_overlap(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let (u, v) = overlapping_pair(rng);
            let delta = rng.gen_range(0.01..0.2);
            overlap_neighborhood(&u, &v, delta, 10, rng.gen()).expect("overlap by construction")
        })
        .collect();
    aggregate(
        "overlap_margin_collapse",
        reports,
        json!({"shared_directions": 1, "delta": [0.01, 0.2], "cloud_samples": 10}),
    )
}

fn suite_dominance(trials: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let reports = (0..trials)
        .map(|_| {
            let d_y = rng.gen_range(2..=4usize);
            let d_j = rng.gen_range(1..d_y);
            let p = rng.gen_range(d_y..=d_y + 6);
            let big = random_subspace_with(p, d_y, rng);
            // contained span: a subset of the big span's basis columns
            let small = SubspaceBasis::from_orthonormal(
                big.matrix().columns(0, d_j).into_owned(),
                2,
                BasisMode::Uncentered,
            );
            let coeff = random_unit_vector(d_j, rng);
            let z = small.matrix() * coeff;
            let margin = span_margin(&z, &[big.clone(), small.clone()]).expect("two bases");
            TheoremReport::check("dominance_degeneracy", 0.0, margin.margin)
        })
        .collect();
    aggregate(
        "dominance_degeneracy",
        reports,
        json!({"contained_span": "subset of basis columns", "point": "unit member of the contained span"}),
    )
}

/// Runs every stability check `trials` times with seeded randomness and
/// returns one aggregate per theorem, in a fixed order.
pub fn run_suite(trials: usize, seed: u64) -> Vec<SuiteReport> {
    type SuiteFn = fn(usize, &mut ChaCha8Rng) -> SuiteReport;
    let suites: [(u64, SuiteFn); 10] = [
        (1, suite_margin_bound),
        (2, suite_repulsion_margin),
        (3, suite_transfer),
        (4, suite_argmin_stability),
        (5, suite_projector_perturbation),
        (6, suite_lipschitz),
        (7, suite_small_angle),
        (8, suite_angle_distance),
        (9, suite_overlap),
        (10, suite_dominance),
    ];
    suites
        .iter()
        .map(|(salt, run)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            run(trials, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight_scenario() -> Scenario {
        sample_scenario(&ScenarioParams {
            ambient_dim: 8,
            dims: vec![1, 1],
            true_class: 1,
            alpha: std::f64::consts::FRAC_PI_2,
            gamma: 1.0,
            epsilon: 0.0,
            noise_le: false,
            seed: 0,
        })
        .unwrap()
    }

    #[test]
    fn tight_orthogonal_case_has_zero_slack() {
        let report = verify_margin_bound(&tight_scenario());
        assert!(report.holds);
        assert!((report.left - 1.0).abs() <= 1e-9);
        assert!((report.right - 1.0).abs() <= 1e-9);
        assert!(report.slack.abs() <= 1e-9);
    }

    #[test]
    fn vacuous_bound_still_holds() {
        let scenario = sample_scenario(&ScenarioParams {
            ambient_dim: 10,
            dims: vec![2, 2],
            true_class: 1,
            alpha: 0.3,
            gamma: 0.5,
            epsilon: 0.5,
            noise_le: false,
            seed: 2,
        })
        .unwrap();
        let report = verify_margin_bound(&scenario);
        assert!(report.right <= 0.0);
        assert!(report.holds);
    }

    #[test]
    fn repulsion_margin_orthogonal_case_is_tight() {
        let report = verify_repulsion_margin(&tight_scenario(), 0.0);
        assert!(report.holds);
        assert!((report.left - 1.0).abs() <= 1e-9);
        assert!((report.right - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn repulsion_margin_eta_one_is_vacuous() {
        let report = verify_repulsion_margin(&tight_scenario(), 1.0);
        assert!(report.applicable);
        assert!(report.holds);
        assert!(report.right <= 0.0);
    }

    #[test]
    fn repulsion_margin_flags_violated_precondition() {
        let scenario = sample_scenario(&ScenarioParams {
            ambient_dim: 10,
            dims: vec![1, 1],
            true_class: 1,
            alpha: 0.2,
            gamma: 1.0,
            epsilon: 0.0,
            noise_le: false,
            seed: 5,
        })
        .unwrap();
        // actual coherence is cos^2(0.2) ~ 0.96, far above the claimed eta
        let report = verify_repulsion_margin(&scenario, 0.01);
        assert!(!report.applicable);
    }

    #[test]
    fn overlap_witness_has_vanishing_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (u, v) = overlapping_pair(&mut rng);
        let (witness, report) = witness_overlap(&u, &v).unwrap();
        assert!((witness.norm() - 1.0).abs() <= 1e-10);
        assert!(report.holds, "margin {}", report.right);
    }

    #[test]
    fn disjoint_spans_report_no_overlap() {
        let u = crate::scenario::random_subspace(12, 2, 1).unwrap();
        let v = crate::scenario::random_subspace(12, 2, 2).unwrap();
        assert!(matches!(
            witness_overlap(&u, &v),
            Err(LabError::NoOverlap { .. })
        ));
    }

    #[test]
    fn small_angle_witness_matches_sine() {
        let angles = [std::f64::consts::FRAC_PI_6];
        let (u, v) = crate::scenario::subspace_pair_with_angles(6, &angles, 4).unwrap();
        let (_, report) = witness_small_angle(&u, &v).unwrap();
        assert!(report.holds);
        assert!((report.left - 0.5).abs() <= 1e-9, "r_j = {}", report.left);
    }

    #[test]
    fn zero_angle_witness_degenerates_to_overlap() {
        let (u, v) = crate::scenario::subspace_pair_with_angles(6, &[0.0], 4).unwrap();
        let (_, report) = witness_small_angle(&u, &v).unwrap();
        assert!(report.holds);
        assert!(report.left <= 1e-9);
    }

    #[test]
    fn transfer_holds_on_clean_in_class_reconstruction() {
        // orthonormal two-class dictionary, target equal to a class-1 atom
        let m = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        let dict = LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap();
        let target = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let report = verify_transfer(&dict, &target, 1, 1).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn transfer_holds_even_for_pure_wrong_class_reconstruction() {
        let m = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ]);
        let dict = LabeledEmbeddingSet::from_raw_labels(m, &[1, 2]).unwrap();
        // true class 1, but the point sits exactly on the class-2 atom
        let target = DVector::from_vec(vec![0.0, 1.0]);
        let report = verify_transfer(&dict, &target, 1, 1).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn stable_profiles_never_flip() {
        let fraction = perturbation_stability_trial(&[0.1, 0.6, 0.9], 0.2, 10_000, 3);
        assert_eq!(fraction, 0.0);
    }

    #[test]
    fn zero_eta_never_flips() {
        let fraction = perturbation_stability_trial(&[0.4, 0.41], 0.0, 1_000, 3);
        assert_eq!(fraction, 0.0);
    }

    #[test]
    fn oversized_eta_flips_sometimes() {
        let fraction = perturbation_stability_trial(&[0.4, 0.5], 0.5, 10_000, 3);
        assert!(fraction > 0.0);
    }
}
