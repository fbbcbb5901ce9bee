use std::path::PathBuf;

/// Errors raised by the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {lines} data lines malformed (limit 1%); samples: {samples:?}")]
    TooManyMalformed {
        path: PathBuf,
        lines: usize,
        malformed: usize,
        samples: Vec<String>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("correlation undefined for a constant vector")]
    UndefinedCorrelation,

    #[error("infinite divergence: a({index}) > 0 where b({index}) = 0")]
    InfiniteDivergence { index: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// True for failures caused by statistically degenerate inputs
    /// (zero variance, too few observations).
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::InsufficientData(_))
    }
}
