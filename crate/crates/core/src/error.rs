use thiserror::Error;

use crate::linalg::IndexSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("index {index} out of range for {bound} columns")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("subgradient is undefined at t = 0")]
    ZeroParameter,

    #[error("direction solver hit its iteration cap ({iterations}) with residual {residual:e}")]
    DirectionIterationCap {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("supplied direction is not a member of the direction set (KKT residual {residual:e})")]
    InconsistentDirection { residual: f64 },

    #[error("direction solve failed at kink {kink} (t = {t}): {source}")]
    AtKink {
        kink: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "looping would enumerate 2^{free} candidate sets at t = {t} (cap 2^{cap}); \
         use the generalized algorithm instead"
    )]
    LoopCapExceeded { t: f64, free: usize, cap: usize },

    #[error("looping found no admissible candidate set at t = {t} (E = {equicorrelation})")]
    LoopingExhausted { t: f64, equicorrelation: IndexSet },

    #[error("adversarial replay direction {segment} failed the membership check (residual {residual:e})")]
    ReplayRejected { segment: usize, residual: f64 },

    #[error("oracle did not converge after {iterations} iterations (objective {objective}, gap {gap:e})")]
    OracleNonConvergence {
        iterations: usize,
        objective: f64,
        gap: f64,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
