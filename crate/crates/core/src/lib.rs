//! Core data model and span-level geometry for residual-based classification.
//!
//! Houses the labeled embedding dictionary, class partitions, orthonormal
//! class-span bases, principal-angle computations, and the spectral
//! diagnostics (effective rank, worst-case inter-class cohesion) used by
//! the inference and training crates.

pub mod data;
pub mod metrics;
pub mod span;
pub mod svd;

pub use data::{l2_normalize, partition_by_class, ClassPartition, DataError, LabeledEmbeddingSet};
pub use span::{
    principal_angles, projector_distance, span_basis, span_margin, subspace_residual,
    AngleSpectrum, BasisMode, SpanError, SubspaceBasis,
};
