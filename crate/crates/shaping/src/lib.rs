//! Training-time geometry shaping: batch objectives and the desk-scale
//! affine encoder trained on them.
//!
//! This crate deliberately has no path to the sparse coder or the residual
//! decision rule. Training shapes geometry; inference stays frozen.

pub mod encoder;
pub mod losses;
pub mod train;

pub use encoder::{Checkpoint, EncoderError, LinearEncoder};
pub use losses::{
    cross_class_leakage_norm, masked_ridge_solve, repulsion_loss, se_loss, total_geometry_loss,
    variance_anchor_loss, GeometryConfig, GeometryLossReport, LossError, MaskedRidgeProblem,
};
pub use train::{
    balanced_batches, objective_gradient, train_ce_reference, train_linear_encoder, CeOutcome,
    GradientMode, TrainConfig, TrainError, TrainOutcome,
};
