use thiserror::Error;

/// Errors raised across the library.
///
/// The variants split into two families that the command-line front end maps
/// onto different exit codes: input problems (bad data, bad parameters, bad
/// configuration) and numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate scatter: {0}")]
    DegenerateScatter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty request: {0}")]
    EmptyRequest(String),

    #[error("unsupported parity: {0}")]
    UnsupportedParity(String),

    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("representation error: {0}")]
    Representation(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("degenerate count distribution: {0}")]
    DegenerateWeights(String),

    #[error("estimation degenerate: {0}")]
    EstimationDegenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("empty table")]
    EmptyTable,

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by the caller's data, parameters or
    /// configuration, as opposed to numerical breakdowns.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Precision(_) | Error::Representation(_) | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
