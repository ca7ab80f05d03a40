use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("probabilities sum to {sum} (tolerance {tol:e})")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("outcome index {0} has no dichotomic assignment")]
    UnmappedIndex(usize),

    #[error("grouping is not a partition of the support: {0}")]
    NotAPartition(String),

    #[error("propagator is not unitary: deviation {deviation:e} exceeds {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("truncation budget exceeded at beta = {beta}, r = {r}: leaked mass {leaked:e} > {budget:e}")]
    Truncation {
        beta: f64,
        r: f64,
        leaked: f64,
        budget: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
