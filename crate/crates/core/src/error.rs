use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// `Io`, `Parse` and friends are data errors (CLI exit code 2); there is no
/// separate usage-error variant because argument parsing lives in clap.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{msg} at line {line}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wrap this error with a description of the configuration that produced it.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        {
            let holds: bool = $cond;
            if !holds {
                return Err($crate::error::Error::$variant(format!($($arg)+)));
            }
        }
    };
}
pub(crate) use ensure;
