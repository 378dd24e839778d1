//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the pipeline, the attacks, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in a line-oriented input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input data violated a structural invariant (duplicate ids, dangling
    /// references, malformed records).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration value is out of range or the requested combination of
    /// settings is not runnable.
    #[error("config error: {0}")]
    Config(String),

    /// An index was queried against a repository version it was not built on.
    #[error("stale index: built for repository version {index_version}, queried with version {repo_version}")]
    StaleIndex { index_version: u64, repo_version: u64 },

    /// Claims reference gold evidence that does not resolve in the repository.
    #[error("unresolvable gold evidence for claims: {}", ids.join(", "))]
    GoldEvidence { ids: Vec<String> },

    /// An attack cannot be applied to the given sentence (no coverage, no
    /// eligible positions, no candidates above threshold).
    #[error("attack not applicable: {0}")]
    AttackInapplicable(String),

    /// A file-backed candidate provider has no entry for the requested key.
    #[error("candidate pool has no entry for key {0:?}")]
    MissingPoolKey(String),

    /// Every candidate was an exact copy of the claim.
    #[error("degenerate candidate set: all candidates are exact claim copies")]
    DegenerateCandidates,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
