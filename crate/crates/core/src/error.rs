use thiserror::Error;

/// Errors produced by region construction, measurement handling and the
/// feasibility/simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("vector of length {0} is not a vectorized square matrix")]
    NotSquareLength(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("effect {index} is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { index: usize, min_eig: f64 },

    #[error("effects do not sum to the identity (deviation {0:.3e})")]
    NotComplete(f64),

    #[error("weights must sum to 1 (sum is {0})")]
    WeightSum(f64),

    #[error("measurement not tomographically complete (rank {rank} < {required})")]
    Incomplete { rank: usize, required: usize },

    #[error("{what} = {value} exceeds the desk-scale cap of {cap}")]
    Cap {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("invalid frequencies: {0}")]
    Frequencies(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
