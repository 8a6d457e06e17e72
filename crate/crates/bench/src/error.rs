use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad suite file, unreadable dataset or unusable output directory.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed trace: {message}")]
    Trace { path: String, message: String },

    #[error(transparent)]
    Core(#[from] psga::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}
