use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum PmechError {
    /// Malformed probability table, kernel or representation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The leakage budget is outside `[0, I(X;Y))`. In that regime `U = Y` is optimal
    /// and the utility equals `H(Y)`.
    #[error("epsilon {epsilon} outside [0, I(X;Y) = {mutual_information}); h_eps = H(Y) = {h_y}")]
    OutOfRange {
        epsilon: f64,
        mutual_information: f64,
        h_y: f64,
    },

    /// An instance exceeds a configured size cap.
    #[error("size error: {0}")]
    Size(String),

    /// Numerical failure inside the LP or vertex enumeration.
    #[error("solver error: {0}")]
    Solver(String),

    /// A mechanism's induced law does not reproduce the joint it claims to come from.
    #[error("provenance error: {0}")]
    Provenance(String),

    /// Generator parameters cannot satisfy the requested hypothesis.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A dominance or contract assertion failed.
    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PmechError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        PmechError::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, PmechError>;
