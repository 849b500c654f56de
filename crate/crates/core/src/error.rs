use thiserror::Error;

/// Errors raised by the recovery, certificate and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The problem has no feasible point (e.g. BPDN with η below the residual floor).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A theorem hypothesis does not hold, so the requested bound does not apply.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// A numerical decision procedure could not reach a verdict.
    #[error("indeterminate: {0}")]
    Indeterminate(String),

    /// The request is refused because it would be combinatorially expensive.
    #[error("refused: {0}")]
    Refused(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
