use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical failure at t = {time}{}: {reason}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    NumericalFailure {
        time: f64,
        cell: Option<usize>,
        reason: String,
    },

    #[error("region selects no cells")]
    EmptyRegion,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub fn is_numerical_failure(&self) -> bool {
        matches!(self, Error::NumericalFailure { .. })
    }
}
