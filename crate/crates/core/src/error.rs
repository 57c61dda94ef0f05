//! Error taxonomy shared across the pipeline.

use std::time::Duration;

/// Errors surfaced by pipeline operations.
///
/// Variants map onto the CLI exit-code classes: configuration problems,
/// transport/threshold failures, and degenerate analysis results.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad or inconsistent user-supplied configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Network-level failure that survived the retry policy.
    #[error("transport error: {0}")]
    Transport(String),

    /// Provider rate limit exhausted; carries the retry-after hint if known.
    #[error("throttled: retry after {retry_after:?}")]
    Throttled { retry_after: Option<Duration> },

    /// Provider returned internally inconsistent data (e.g. mixed embedding lengths).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// No term survived the support threshold; message lists the top supports seen.
    #[error("empty matrix: {0}")]
    EmptyMatrix(String),

    /// Factor structure collapsed (no eigenvalue above the Kaiser cutoff).
    #[error("degenerate structure: {0}")]
    DegenerateStructure(String),

    /// Elicitation failure fraction exceeded the configured abort threshold.
    #[error("failure threshold exceeded: {failed} of {total} records failed")]
    FailureThreshold { failed: usize, total: usize },

    /// Quadratic weighted kappa is undefined for the given rating pairs.
    #[error("undefined kappa: {0}")]
    UndefinedKappa(String),

    /// Score/annotation join produced no pairs.
    #[error("no overlap: {0}")]
    NoOverlap(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
