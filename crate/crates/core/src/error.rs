use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("CFL violation: dt = {dt:e} exceeds the admissible step {required:e}")]
    Cfl { dt: f64, required: f64 },

    #[error("non-finite nonlinear term during step at t = {time}")]
    NonFiniteStep { time: f64 },

    #[error("cover infeasible: {violated}; minimal feasible K1 = {min_k1}, minimal K2 = {min_k2}")]
    CoverInfeasible {
        violated: String,
        min_k1: usize,
        min_k2: usize,
    },

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
