use std::fmt;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error{}: {message}", Location(*.row, .column.as_deref()))]
    Parse {
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("no prediction for feature {0}")]
    NoPrediction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn parse(row: Option<usize>, column: Option<&str>, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            column: column.map(str::to_owned),
            message: message.into(),
        }
    }

    /// Stable machine-readable tag, used for CLI error lines and FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Integrity(_) => "integrity",
            Error::Lookup(_) => "lookup",
            Error::DegenerateSplit(_) => "degenerate_split",
            Error::Dimension(_) => "dimension",
            Error::Format(_) => "format",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::NoPrediction(_) => "no_prediction",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

struct Location<'a>(Option<usize>, Option<&'a str>);

impl fmt::Display for Location<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.0, self.1) {
            (Some(r), Some(c)) => write!(f, " at row {r}, column '{c}'"),
            (Some(r), None) => write!(f, " at row {r}"),
            (None, Some(c)) => write!(f, " in column '{c}'"),
            (None, None) => Ok(()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
