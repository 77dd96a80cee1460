use thiserror::Error;

use crate::types::PairwiseViolation;

pub type Result<T> = std::result::Result<T, PlmError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlmError {
    /// Input is not square, or has fewer than two classes.
    #[error("structural error: {0}")]
    Shape(String),

    #[error("pairwise matrix violates {} invariant(s), first: {}", .0.len(), .0[0])]
    InvalidPairwise(Vec<PairwiseViolation>),

    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),

    #[error("class count mismatch: expected {expected}, found {found}")]
    ClassCountMismatch { expected: usize, found: usize },

    #[error("singular input: {0}")]
    Singular(String),

    /// The linear system solved by the quadratic coupling is degenerate.
    #[error("numerical failure: {reason} (condition estimate {condition:e})")]
    NumericalFailure { reason: String, condition: f64 },

    #[error("every class was removed by drop stabilization")]
    AllClassesDropped,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample id mismatch: {0}")]
    IdMismatch(String),

    #[error("label {label} of sample {sample_id} is not one of the classes ({class_a}, {class_b})")]
    ForeignLabel {
        sample_id: String,
        label: usize,
        class_a: usize,
        class_b: usize,
    },

    #[error("empty input: {0}")]
    Empty(String),
}
