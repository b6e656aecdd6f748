use std::path::PathBuf;

/// Crate-wide error type.
///
/// Variants fall into three families that the command line maps onto
/// distinct exit codes: usage/config problems, data problems and numeric
/// failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value produced in layer {layer} during {stage}")]
    NumericOverflow { layer: usize, stage: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: unknown marker values: {values:?}")]
    UnknownMarker { path: PathBuf, values: Vec<String> },

    #[error("column '{0}' has no observed values and cannot be imputed")]
    UnimputableColumn(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 1,
            Error::NumericOverflow { .. } => 3,
            _ => 2,
        }
    }
}
