//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the estimation library and simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Smallest singular value fell below the relative rank tolerance.
    #[error("matrix is rank deficient (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    /// Singular value iteration ran out of sweeps.
    #[error("singular value iteration did not converge within {sweeps} sweeps")]
    NonConvergent { sweeps: usize },
    /// Probability argument outside the open interval (0, 1).
    #[error("probability {value} is outside the open interval (0, 1)")]
    ProbabilityDomain { value: f64 },
    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A search was requested over an empty candidate set.
    #[error("search set is empty")]
    EmptySearchSet,
    /// Exhaustive enumeration would exceed the configured guard.
    #[error("search space of {candidates} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { candidates: usize, limit: usize },
    /// A symbol does not sit on the constellation grid.
    #[error("symbol at position {index} is not on the constellation grid")]
    InvalidSymbol { index: usize },
    /// The {b_i, common-tail} split does not reproduce the search minimum.
    #[error("single-vector/common-tail decomposition does not preserve the search minimum")]
    DecompositionFailed,
    /// A zero symbol error rate carries no SNR information.
    #[error("zero symbol error rate cannot be converted to an SNR")]
    ZeroSer,
    /// Not enough non-excluded trials to form statistics.
    #[error("need at least 2 non-excluded records, got {got}")]
    InsufficientData { got: usize },
    /// Bad run configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// File I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input data (config file, channel matrix file).
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
