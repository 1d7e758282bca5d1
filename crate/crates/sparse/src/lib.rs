//! Sparse coding and the fixed class-residual decision rule.
//!
//! The pursuit solver and the residual rule live together because they form
//! the frozen inference side of the artifact: nothing here is trainable, and
//! the training crates must not depend on this one.

pub mod omp;
pub mod src;

pub use omp::{omp, OmpError, SparseCode, ATOM_NORM_TOL, DEFAULT_STOP_TOL};
pub use src::{
    class_restricted_residuals, class_restricted_sparse_residual, classify_point, evaluate,
    leakage_decomposition, src_predict, EvaluationReport, LeakageDecomposition, ResidualProfile,
    SparseResidualMode, SrcError,
};
