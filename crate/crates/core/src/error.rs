use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Record-level parse failures. These are counted and skipped unless the
/// pipeline runs in strict mode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` has the wrong type")]
    WrongType { field: &'static str },
    #[error("empty id")]
    EmptyId,
    #[error("unparseable timestamp {0:?}")]
    Timestamp(String),
    #[error("text is {0} bytes, limit is 10000")]
    TextTooLong(usize),
}

impl RecordError {
    /// Short category key used by warning tallies.
    pub fn category(&self) -> &'static str {
        match self {
            RecordError::Malformed(_) | RecordError::WrongType { .. } => "malformed",
            RecordError::MissingField(_) | RecordError::EmptyId => "missing_field",
            RecordError::Timestamp(_) => "bad_timestamp",
            RecordError::TextTooLong(_) => "text_too_long",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("{}{}: {message}", path.display(), line_suffix(*line))]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("empty lexicon `{0}`")]
    EmptyLexicon(String),
    #[error("empty gazetteer")]
    EmptyGazetteer,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty sequence")]
    EmptySequence,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("date {date} outside window {start}..={end}")]
    OutsideWindow {
        date: chrono::NaiveDate,
        start: chrono::NaiveDate,
        end: chrono::NaiveDate,
    },
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("conservation violated: {0}")]
    Conservation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Internal(String),
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(": line {line}")
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 1 usage/config, 2 input data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. }
            | Error::Record { .. }
            | Error::Data { .. }
            | Error::EmptyLexicon(_)
            | Error::EmptyGazetteer
            | Error::Dimension { .. }
            | Error::NonFinite(_)
            | Error::EmptySequence
            | Error::EmptyDataset
            | Error::OutsideWindow { .. }
            | Error::LengthMismatch(..)
            | Error::TooShort(_) => 2,
            Error::Diverged(_) | Error::Conservation(_) | Error::Internal(_) => 3,
        }
    }
}
