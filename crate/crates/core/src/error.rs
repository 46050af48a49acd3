use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A table or search graph would grow past the configured memory budget.
    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error("enumeration cap exceeded: {size} joint configurations > cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
