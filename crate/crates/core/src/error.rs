use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("poisson linear predictor {eta:.3} exceeds the bound {bound} at row {row}")]
    PoissonOverflow { row: usize, eta: f64, bound: f64 },

    #[error("non-finite value in term `{term}`")]
    NonFinite { term: String },

    #[error("optimization diverged at iteration {iteration} (ELBO = {elbo})")]
    Divergence {
        iteration: usize,
        elbo: f64,
        trace_prefix: Vec<f64>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("draw count must be even and at least 4, got {0}")]
    BadDrawCount(usize),

    #[error("restricted least squares infeasible: support size {support} with {rows} rows")]
    RestrictedOlsInfeasible { support: usize, rows: usize },

    #[error("cross-validation fold {0} has constant outcome")]
    DegenerateFold(usize),

    #[error("family `{0}` is not supported by this method")]
    UnsupportedFamily(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
