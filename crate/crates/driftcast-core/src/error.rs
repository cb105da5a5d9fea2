//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by data handling, fitting, and adaptation runs.
#[derive(Debug, Error)]
pub enum Error {
    /// Split ratios do not form a valid partition.
    #[error("invalid split ratios: {0}")]
    Ratio(String),

    /// A series or segment is shorter than an operation requires.
    #[error("series too short: need at least {required} time steps, got {actual}")]
    TooShort { required: usize, actual: usize },

    /// Matrix or vector dimensions do not match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The regularized normal system could not be solved.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Training loss became non-finite.
    #[error("training diverged: {0}")]
    Divergence(String),

    /// A gradient entry was NaN or infinite.
    #[error("non-finite gradient at flat index {0}")]
    NonFiniteGradient(usize),

    /// A cell failed to parse; positions are 1-based file coordinates.
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    /// A parsed cell was NaN or infinite; positions are 1-based file coordinates.
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    /// A synthetic data spec failed validation.
    #[error("invalid generator spec: {0}")]
    Spec(String),

    /// An index or window fell outside the underlying series.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A model document failed to load or validate.
    #[error("model document: {0}")]
    ModelDoc(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
