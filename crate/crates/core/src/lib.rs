//! Pairwise likelihood matrices and regular pairwise coupling.
//!
//! A multi-class posterior `p` determines the matrix of its two-class
//! restrictions `r_ij = p_i / (p_i + p_j)`. Coupling goes the other way:
//! given pairwise likelihoods from any set of binary classifiers, recover a
//! multi-class posterior. Two regular coupling methods are provided
//! (Wu-Lin-Weng and Bayes-covariant), together with tools built on the
//! modularity of coupled models: patching single pairs, recombining
//! classifiers from independently trained models, and abstaining when the
//! pairwise predictions are far from any consistent posterior.
//!
//! Batch operations run on rayon when the default `rayon` feature is on and
//! sequentially otherwise, with identical results.

pub mod abstention;
pub mod coupling;
pub mod datagen;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod par;
pub mod rng;
pub mod simplex;
pub mod types;

pub use abstention::{
    abstaining_predict, calibrate_threshold, distance, distance_bc, distance_wlw, Decision,
    SurenessScore,
};
pub use coupling::{
    couple, couple_batch, couple_bc, couple_wlw, delta2_value, extend_posterior, iia_restrict,
    reconstruct_from_column, stabilize_clip, stabilize_drop, theta_map, ReducedMatrix,
};
pub use ensemble::{
    bootstrap_draws, bootstrap_recombine, bootstrap_summary, ensemble_summary, partial_correct,
    CorrectionPatch, EnsembleSummary,
};
pub use error::{PlmError, Result};
pub use eval::{
    accuracy, argmax_predict, confusion_matrix, pairwise_accuracy, worst_confused_pair,
    ConfusionMatrix,
};
pub use types::{
    validate_pairwise, BinaryPrediction, CouplingConfig, LabeledBatch, Method,
    PairwiseLikelihoodMatrix, PairwiseViolation, Posterior, Stabilization, ThetaMatrix,
};
