use thiserror::Error;

use crate::group::GroupKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(GroupKind, GroupKind),

    #[error("invalid structure constants: {0}")]
    Structure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("degenerate Lagrangian: fiber Hessian has numerical rank {rank} of {dim}")]
    DegenerateLagrangian { rank: usize, dim: usize },

    #[error("field is not reduced: {0}")]
    NotReduced(&'static str),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
