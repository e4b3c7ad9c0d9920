use thiserror::Error;

/// Errors raised by the optimisers, the problem catalogue and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("objective returned a non-finite value at the query point")]
    NonFiniteValue,

    #[error("value {0} is not finite")]
    NotFinite(f64),

    #[error("store is empty")]
    EmptyStore,

    #[error("base dimension b = {b} must satisfy 1 <= b < n = {n}")]
    InvalidBase { n: usize, b: usize },

    #[error("dominant direction is the zero vector")]
    ZeroDirection,

    #[error("objective does not provide a gradient")]
    GradientUnavailable,

    #[error("starting point is outside the feasible box")]
    InfeasibleStart,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("evaluation budget is zero")]
    ZeroBudget,

    #[error("window {lo}:{hi} does not cover at least two trace records")]
    InvalidWindow { lo: u64, hi: u64 },

    #[error("traces mix instances `{0}` and `{1}`")]
    MixedInstances(String, String),

    #[error("traces mix algorithms `{0}` and `{1}`")]
    MixedAlgorithms(String, String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
