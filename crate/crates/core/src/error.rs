use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is singular: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("matrix is not positive definite at row {row} ({context})")]
    NotPositiveDefinite { row: usize, context: String },

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {error:e}, \
         tolerance {tolerance:e}, {evaluations} evaluations ({context})"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
        evaluations: usize,
        context: String,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("location {point:?} is outside the mesh")]
    OutsideMesh { point: Vec<f64> },

    #[error("non-finite log density in chain {chain} at iteration {iteration}; state: {state}")]
    Divergence {
        chain: usize,
        iteration: usize,
        state: String,
    },

    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
