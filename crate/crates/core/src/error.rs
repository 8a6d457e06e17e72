use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numeric failure at iteration {iteration}: {message}")]
    NumericFailure { iteration: u64, message: String },

    #[error("gradient table needs {required} bytes, budget is {budget} bytes")]
    MemoryBudget { required: u128, budget: u64 },

    #[error("invariant violated at iteration {iteration}: {message}")]
    Invariant { iteration: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
