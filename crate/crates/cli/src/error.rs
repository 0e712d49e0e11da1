//! Process-level error classification; each class maps to a stable exit code.

use std::fmt;

use hermite_sampling::{AnalysisError, FieldError, GridError, OperatorError, ParseError};

#[derive(Debug)]
pub enum AppError {
    /// Config file or expression failed to parse (exit 2).
    Config(String),
    /// Inputs parsed but are rejected by validation (exit 3).
    Validation(String),
    /// A numerical gate refused to run, e.g. non-constant moments (exit 4).
    Gate(String),
    /// Filesystem failure (exit 5).
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Validation(_) => 3,
            AppError::Gate(_) => 4,
            AppError::Io(_) => 5,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "config error: {msg}"),
            AppError::Validation(msg) => write!(f, "validation error: {msg}"),
            AppError::Gate(msg) => write!(f, "numerical gate: {msg}"),
            AppError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl From<ParseError> for AppError {
    fn from(err: ParseError) -> Self {
        AppError::Config(err.to_string())
    }
}

impl From<FieldError> for AppError {
    fn from(err: FieldError) -> Self {
        match err {
            FieldError::Parse(parse) => AppError::Config(parse.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<OperatorError> for AppError {
    fn from(err: OperatorError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<GridError> for AppError {
    fn from(err: GridError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<AnalysisError> for AppError {
    fn from(err: AnalysisError) -> Self {
        match err {
            AnalysisError::NonConstantMoments { .. } => AppError::Gate(err.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> Self {
        AppError::Io(err.to_string())
    }
}
