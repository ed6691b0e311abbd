//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix dimensions do not line up for the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A channel matrix is (numerically) rank deficient, so the ZF precoder
    /// is undefined.
    #[error("channel is rank deficient: {0}")]
    RankDeficient(String),

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A degenerate input (zero vector where a direction is required).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The ADMM iteration produced a non-finite value.
    #[error("solver diverged at iteration {iter}")]
    Diverged { iter: usize },

    /// The constraint set of an instance handed to the oracle is empty.
    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    /// Experiment spec failed validation.
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    /// Serialization / deserialization problems with data files.
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub(crate) fn format(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format { path: path.into(), detail: detail.into() }
    }
}
