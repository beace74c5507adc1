use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Schema and domain errors carry enough context (file, line, offending id)
/// for the CLI to print a message a user can act on.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in a line-delimited file failed to parse or violated its invariants.
    #[error("{}: line {line}: {message}", path.display())]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Structural problem in a document or between inputs.
    #[error("schema error: {0}")]
    Schema(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Hard constraints of a group admit no assignment.
    #[error("inference error: hard constraints of group '{group}' are infeasible")]
    Infeasible { group: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn schema(message: impl Into<String>) -> Self {
        Error::Schema(message.into())
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
