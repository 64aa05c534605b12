//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank deficiency while orthonormalizing: column {column} is numerically dependent on the preceding columns")]
    RankDeficient { column: usize },

    #[error("true reward direction is degenerate: theta_star coordinates are all zero")]
    DegenerateReward,

    #[error("zero variance: cannot fit a z-score normalizer on constant input")]
    ZeroVariance,

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("slate is empty")]
    EmptySlate,

    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),

    #[error("candidate {index} carries no vector; oracle selection needs vectors")]
    MissingVector { index: usize },

    #[error("non-finite score encountered at candidate {index}")]
    NonFiniteScore { index: usize },

    #[error("training vector {index} lies outside the subspace (orthogonal norm {norm:.3e})")]
    NotInSubspace { index: usize, norm: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("normalizer not fitted: {0}")]
    UnfittedNormalizer(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("model file version {got} is not supported (expected {expected})")]
    UnsupportedVersion { expected: u32, got: u32 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
