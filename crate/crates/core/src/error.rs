use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("enumeration for {what} needs {required} weighted outcomes, budget is {budget}")]
    BudgetExceeded {
        what: String,
        required: f64,
        budget: f64,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample is not realizable: {0}")]
    NotRealizable(String),

    #[error("unknown variable `{0}` in joint table")]
    UnknownVariable(String),

    #[error("quantity `{0}` is not supported here: {1}")]
    Unsupported(String, String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
