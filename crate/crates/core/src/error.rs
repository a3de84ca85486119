//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A malformed input file; names the file, row, and offending content.
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    /// A domain object could not be constructed from otherwise well-formed input.
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    /// Two source rows were assigned the same corrected label.
    #[error("relabel collision in {grid}: rows '{a}' and '{b}' both assigned label '{label}'")]
    RelabelCollision {
        grid: String,
        a: String,
        b: String,
        label: String,
    },

    /// Conflicting simulator perturbations touch the same row.
    #[error("conflicting perturbations on {grid} row '{id}'")]
    PerturbationConflict { grid: String, id: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

impl Error {
    pub fn parse(path: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            message: message.into(),
        }
    }

    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from user-provided input rather than an
    /// internal failure; the CLI maps this to exit status 1. File-system
    /// errors count as input errors since every path is user-supplied.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Invalid { .. }
                | Error::Manifest { .. }
                | Error::PerturbationConflict { .. }
                | Error::Io { .. }
        )
    }
}
