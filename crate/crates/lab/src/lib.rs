//! Synthetic geometry scenarios and Monte-Carlo verifiers for the residual
//! stability results.

pub mod scenario;
pub mod verify;

pub use scenario::{
    random_subspace, sample_scenario, subspace_pair_with_angles, union_of_subspaces_dataset,
    DatasetParams, LabError, Scenario, ScenarioParams,
};
pub use verify::{
    overlap_neighborhood, perturbation_stability_trial, run_suite, verify_margin_bound,
    verify_repulsion_margin, verify_transfer, witness_overlap, witness_small_angle, SuiteReport,
    TheoremReport, THEOREM_TOL,
};
