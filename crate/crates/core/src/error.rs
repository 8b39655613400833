use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::Format;

/// Refusals raised by emitters. Question indices are 0-based; messages
/// number questions from 1.
#[derive(Debug, Error)]
pub enum EmitError {
    #[error("question {} cannot be written as {format}: {reason}", index + 1)]
    Unsupported { index: usize, format: Format, reason: String },
    #[error("question {} cannot be written as {format} without changing its meaning: {reason}", index + 1)]
    Unrepresentable { index: usize, format: Format, reason: String },
}

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("bank references no media files; write plain GIFT instead of a zip archive")]
    NoMedia,
    #[error("unresolved media references: {}", .0.join(", "))]
    Unresolved(Vec<String>),
    #[error("media names differ only by case: {}", .0.join(", "))]
    CaseCollision(Vec<String>),
    #[error("archive must hold exactly one GIFT text file at its root, found {0}")]
    RootTextFiles(usize),
    #[error("archive GIFT file is not valid UTF-8")]
    NotUtf8,
    #[error("corrupt zip archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Emit(#[from] EmitError),
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("input bank has {0} validation error(s); fix them before converting")]
    InvalidBank(usize),
    #[error("strict conversion to {format} failed at question {}: {reason}", index + 1)]
    Unsupported { index: usize, format: Format, reason: String },
    #[error("strict mode cannot skip unsupported questions")]
    BadPolicy,
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Media(#[from] MediaError),
}
