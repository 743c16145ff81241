//! Crate-wide error type.
//!
//! The CLI maps these variants onto process exit codes, so the grouping here
//! is part of the external contract: config problems, infeasible requests,
//! and missing/stale artifacts are distinguishable.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration field failed validation. `field` is the path of the
    /// offending key in the config file.
    #[error("invalid config: {field}: {reason}")]
    Config { field: String, reason: String },

    /// The request cannot be served: some chain stage has no feasible host,
    /// or a candidate path violates a deployment constraint.
    #[error("infeasible request: {0}")]
    Infeasible(String),

    /// An offline artifact is absent. The message names the command that
    /// produces it.
    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },

    /// An artifact exists but was built from a different configuration.
    #[error("artifact {path} was built for config {found}, expected {expected}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    /// A malformed artifact or request file.
    #[error("malformed {what}: {reason}")]
    Malformed { what: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn malformed(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            what: what.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
