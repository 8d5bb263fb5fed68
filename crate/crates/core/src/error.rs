use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid trace {0}")]
    InvalidTrace(f64),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("solver failure: {message} (primal residual {primal:e}, dual residual {dual:e})")]
    Solver {
        message: String,
        primal: f64,
        dual: f64,
    },
    #[error("rate budget infeasible: {0}")]
    RateInfeasible(String),
    #[error("event E failed for every seed in the retry budget ({retries} attempts)")]
    RetriesExhausted { retries: usize },
    #[error("evaluation cancelled")]
    Cancelled,
}

pub type Result<T> = std::result::Result<T, Error>;
