use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input file: {}", .0.display())]
    MissingPath(PathBuf),

    #[error("model file not found: {}", .0.display())]
    MissingModel(PathBuf),

    #[error("extractor `{extractor}` does not support language `{language}`")]
    Capability { extractor: String, language: String },

    #[error("extraction failed for sentence `{id}`: {message}")]
    Extraction { id: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("non-finite value at stage `{stage}`")]
    Numeric { stage: String },

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("unknown sentence id `{0}`")]
    UnknownSentence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
