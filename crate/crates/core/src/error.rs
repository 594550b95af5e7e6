use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical routine met a non-finite value or left its domain.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// The equivalent channel is (numerically) rank deficient.
    #[error("singular channel: smallest pivot {pivot:e} is below tolerance")]
    SingularChannel { pivot: f64 },

    /// A search space exceeds the configured guard.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// A configuration field was missing, unknown or malformed.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
