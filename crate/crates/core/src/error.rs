use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The sphere moment bounds (and hence `rho`) only hold for `n >= 8`.
    #[error("dimension n = {n} is below 8, outside the range where the sphere moment bounds hold")]
    DimensionTooSmall { n: usize },

    #[error("non-finite objective value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("run {index} (seed {seed}) aborted: {source}")]
    SeedAborted {
        index: usize,
        seed: u64,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
