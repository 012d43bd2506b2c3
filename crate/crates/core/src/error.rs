use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix or state has non-finite entries")]
    NonFinite,
    #[error("generator is not Hermitian")]
    NotHermitian,
    #[error("matrix is not unitary within tolerance")]
    NotUnitary,
    #[error("matrix is not a contraction (operator norm exceeds 1)")]
    NotContraction,
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("branch probabilities sum to {0}, above 1: inputs are not contractions")]
    ExcessProbability(f64),
    #[error("free evolution step count {0} exceeds the guard of {max}", max = crate::qgate::MAX_FREE_STEPS)]
    TooManySteps(u64),
    #[error("W is singular; W^-s is undefined")]
    SingularW,
    #[error("inconsistent walk path: {0}")]
    InconsistentPath(String),
    #[error("invalid probability {0}")]
    InvalidProbability(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("horizon exceeded while searching for a gate budget (p = {p})")]
    HorizonExceeded { p: f64 },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
