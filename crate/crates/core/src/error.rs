use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("elementary swap needs two distinct rows (got {0} twice)")]
    IdenticalRows(usize),

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("swap state is stale: it tracks design {expected:#018x}, got {found:#018x}")]
    StaleState { expected: u64, found: u64 },

    #[error("dimension {requested} exceeds the supported maximum {max}")]
    DimensionUnsupported { requested: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
