//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("benchmark: {0}")]
    Benchmark(String),

    #[error("case {case}: unknown document {doc_id:?}")]
    MissingDocument { case: usize, doc_id: String },

    #[error("case {case}: span [{start}, {end}) out of bounds for {doc_id:?} (document length {len})")]
    SpanOutOfBounds {
        case: usize,
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("summarization backend failed for {doc_id:?}: {message}")]
    Backend { doc_id: String, message: String },

    /// Per-document failures collected over a whole corpus run.
    #[error("{} document(s) could not be summarized: {}", .0.len(), format_failures(.0))]
    SummarizeFailures(Vec<(String, String)>),

    #[error("embedding provider: {0}")]
    Provider(String),

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("missing summaries for document(s): {}", .0.join(", "))]
    MissingSummaries(Vec<String>),

    #[error("index: {0}")]
    Index(String),

    #[error("synthetic corpus: {0}")]
    Synthetic(String),
}

fn format_failures(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(doc, msg)| format!("{doc}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// True for errors caused by bad inputs or configuration rather than by
    /// the environment at runtime. Callers use this to pick exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Benchmark(_)
                | Error::MissingDocument { .. }
                | Error::SpanOutOfBounds { .. }
                | Error::InvalidUtf8 { .. }
                | Error::MissingSummaries(_)
                | Error::Synthetic(_)
        )
    }
}
