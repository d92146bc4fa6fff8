use thiserror::Error;

/// Errors raised anywhere in the evaluation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input was not well-formed JSON for the expected schema.
    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// Input parsed but violates a data-model invariant.
    #[error("validation error ({locus}): {message}")]
    Validation { locus: String, message: String },

    /// A vector or point configuration has no defined angle or line.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A value lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A miss-rate was requested for a subgroup with zero support.
    #[error("undefined rate: subgroup has no instances")]
    UndefinedRate,

    /// A body-region average is missing one of its member joints.
    #[error("incomplete region {region}: missing joint {joint}")]
    IncompleteRegion { region: String, joint: String },

    /// A match outcome refers to a ground truth without attributes.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A synthetic-data specification cannot be realised.
    #[error("spec error: {0}")]
    Spec(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(locus: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            locus: locus.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(source_name: &str, err: &serde_json::Error) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// True for errors caused by bad input data (as opposed to I/O).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
