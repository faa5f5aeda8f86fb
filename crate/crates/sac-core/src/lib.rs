//! Retrieval pipeline for corpora of structurally similar documents.
//!
//! The crate builds a chunked knowledge base in which every chunk can carry a
//! prepended per-document summary ("document fingerprint"), retrieves over it
//! with exact dense cosine search, Okapi BM25, or a weighted hybrid of both,
//! and scores retrieval quality with document-level mismatch and
//! character-level precision/recall against span-annotated benchmarks.
//!
//! The pipeline stages map onto the modules:
//!
//! - [`corpus`]: documents, spans, benchmark cases, and loading/validation.
//! - [`chunking`]: recursive character splitting with faithful source spans.
//! - [`summary`]: prompt rendering, chat backends, length enforcement, cache.
//! - [`embedding`]: embedding providers (remote HTTP and local feature hashing).
//! - [`index`]: knowledge-base build, dense/BM25/hybrid search, persistence.
//! - [`evaluation`]: per-query metrics, aggregation, and report emission.
//! - [`synthetic`]: boilerplate corpus generator for controlled experiments.
//!
//! Everything outside the optional `remote` feature is pure computation plus
//! plain file I/O, so the whole offline path (hash embedder + stub summarizer)
//! runs without network access and compiles for wasm32.

pub mod chunking;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod index;
pub mod prompts;
#[cfg(feature = "remote")]
pub mod remote;
pub mod summary;
pub mod synthetic;

pub use error::{Error, Result};
