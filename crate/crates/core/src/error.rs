use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("invalid parameter `{field}`: {msg}")]
    InvalidParameter { field: &'static str, msg: String },

    #[error("time grid is not strictly increasing at index {index}")]
    GridNotIncreasing { index: usize },

    #[error(
        "grid coverage: integrand mass below t_min = {t_min:.3e} is not negligible \
         ((1-F(t_min))^(N-1) = {weight:.9}); extend the grid toward t = {peak:.3e}"
    )]
    GridCoverage { t_min: f64, peak: f64, weight: f64 },

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("target {0} is unreachable from the start set")]
    Unreachable(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        func,
        msg: msg.into(),
    }
}

pub(crate) fn invalid(field: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        msg: msg.into(),
    }
}
