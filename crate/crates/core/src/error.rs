use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented invariant of a domain type.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A partition file or color definition failed validation.
    #[error("partition color {color_id}: {reason}")]
    InvalidColor { color_id: u16, reason: String },

    /// Referenced fuzzy color id does not exist in the partition.
    #[error("unknown fuzzy color id {0}")]
    UnknownColor(u16),

    #[error("duplicate fuzzy color id {0}")]
    DuplicateColor(u16),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// The palette knowledge base has no palettes; the system has not been mined yet.
    #[error("palette knowledge base is empty")]
    EmptyKnowledgeBase,

    #[error("{0} not found")]
    NotFound(String),

    /// A file on disk failed to parse or validate.
    #[error("corrupt file {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },

    #[error("store at {} is locked by another process", .0.display())]
    Locked(PathBuf),

    #[error("image decode: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// True when the error stems from bad input data rather than the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Locked(_))
    }
}
