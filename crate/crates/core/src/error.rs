use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the mining / analysis / ranking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("repository not found at {path}: {reason}")]
    RepositoryNotFound { path: PathBuf, reason: String },

    #[error("branch {branch:?} not found (no fallback available)")]
    BranchNotFound { branch: String },

    #[error("git invocation failed ({command}): exit {status}\n{stderr}")]
    VcsToolFailure {
        command: String,
        status: i32,
        stderr: String,
    },

    #[error("unknown language profile {0:?}")]
    UnknownProfile(String),

    /// Irrecoverably malformed source. Recorded per file as unanalyzable,
    /// never fatal to a run.
    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("profile {0:?} does not support import coupling analysis")]
    ProfileLacksCoupling(String),

    #[error("external checker failed ({command}): exit {status}\n{stderr}")]
    CheckerProcessFailure {
        command: String,
        status: i32,
        stderr: String,
    },

    #[error("external checker output malformed: {reason}; payload: {payload}")]
    CheckerProtocolError { reason: String, payload: String },

    #[error("metric {0:?} has no threshold rule configured")]
    UnknownMetric(String),

    #[error("cannot aggregate an empty set of individual marks")]
    EmptyMarks,

    #[error("metrics missing from the store: {0}; run the analyze step first")]
    MissingMetrics(String),

    #[error("analysis store corrupted at {path}: {reason}")]
    StoreCorruption { path: PathBuf, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
