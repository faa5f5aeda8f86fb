//! Knowledge base: summary-augmented chunk store with dense, sparse, and
//! hybrid retrieval.
//!
//! Chunks are embedded and BM25-indexed over their `augmented_text` (the
//! summary, a `"\n\n"` separator, and the chunk text when summaries are
//! supplied; the chunk text alone otherwise). The original chunk span is
//! never touched by augmentation, so
//! every search result maps back to exact source characters. Dense search is
//! an exact full scan; queries are embedded raw, never augmented.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunking::Chunk;
use crate::corpus::Span;
use crate::embedding::{cosine, EmbeddingProvider, Vector};
use crate::error::{Error, Result};
use crate::summary::{Summary, SummaryStrategy};

const FORMAT_VERSION: u32 = 1;

/// Separator placed between the summary and the chunk text when augmenting.
pub const AUGMENT_SEPARATOR: &str = "\n\n";

/// Okapi BM25 parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if self.k1.is_nan() || self.k1 <= 0.0 {
            return Err(Error::Config("bm25 k1 must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config("bm25 b must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Convex weighting between dense (semantic) and BM25 (keyword) scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridWeights {
    w_semantic: f64,
}

impl HybridWeights {
    pub fn new(w_semantic: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_semantic) {
            return Err(Error::Config(format!(
                "w_semantic must be in [0, 1], got {w_semantic}"
            )));
        }
        Ok(HybridWeights { w_semantic })
    }

    pub fn w_semantic(&self) -> f64 {
        self.w_semantic
    }

    pub fn w_keyword(&self) -> f64 {
        1.0 - self.w_semantic
    }
}

/// A chunk as stored in the index: the original chunk plus the text that was
/// actually embedded and token-indexed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexedChunk {
    pub chunk: Chunk,
    pub augmented_text: String,
    #[serde(skip)]
    pub vector: Vector,
}

/// One ranked search entry: a row into the index plus its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub row: usize,
    pub score: f64,
}

/// Ranked results, scores non-increasing, at most `k` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub hits: Vec<SearchHit>,
    pub k: usize,
}

impl SearchResult {
    /// Restrict to the first `k` entries (used for prefix-derived multi-k
    /// evaluation; valid because rankings are deterministic).
    pub fn prefix(&self, k: usize) -> SearchResult {
        SearchResult {
            hits: self.hits.iter().take(k).copied().collect(),
            k,
        }
    }
}

/// A search hit resolved to its document and original span.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedSpan {
    pub doc_id: String,
    pub span: Span,
    pub score: f64,
}

/// How a search should rank chunks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchMode {
    Dense,
    Bm25,
    Hybrid { weights: HybridWeights, pool: usize },
}

/// Summary-augmentation metadata recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacMeta {
    pub enabled: bool,
    pub strategy: Option<SummaryStrategy>,
    pub summary_length: Option<usize>,
}

/// Index-build options beyond the scoring parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Token-index the summary-augmented text (true) or the raw chunk text
    /// (false) for BM25. Dense vectors always embed the augmented text.
    pub sparse_on_augmented: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            sparse_on_augmented: true,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    dim: usize,
    chunk_count: usize,
    bm25: Bm25Params,
    provider_fingerprint: String,
    sac: SacMeta,
    #[serde(default)]
    options: BuildOptions,
}

#[derive(Debug, Serialize, Deserialize)]
struct PostingsFile {
    /// term -> [(chunk_row, tf), ...]
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    /// term -> document frequency (number of chunks containing it)
    df: BTreeMap<String, u32>,
    avgdl: f64,
}

/// Immutable searchable knowledge base.
pub struct Index {
    chunks: Vec<IndexedChunk>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    token_counts: Vec<u32>,
    avgdl: f64,
    bm25: Bm25Params,
    dim: usize,
    provider: Box<dyn EmbeddingProvider>,
    sac: SacMeta,
    options: BuildOptions,
}

impl std::fmt::Debug for Index {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Index")
            .field("chunks", &self.chunks.len())
            .field("terms", &self.postings.len())
            .field("dim", &self.dim)
            .field("provider", &self.provider.fingerprint())
            .field("sac", &self.sac)
            .finish()
    }
}

/// Lowercase and split on any non-alphanumeric character; no stemming or
/// stop words. Both BM25 indexing and query processing use this.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

impl Index {
    /// Build an index over `chunks`. When `summaries` is given, every chunk's
    /// document must have one; its text is prepended for embedding and BM25,
    /// never for span accounting.
    pub fn build(
        chunks: Vec<Chunk>,
        summaries: Option<&BTreeMap<String, Summary>>,
        provider: Box<dyn EmbeddingProvider>,
        bm25: Bm25Params,
    ) -> Result<Index> {
        Self::build_with_options(chunks, summaries, provider, bm25, BuildOptions::default())
    }

    /// [`Index::build`] with explicit [`BuildOptions`].
    pub fn build_with_options(
        chunks: Vec<Chunk>,
        summaries: Option<&BTreeMap<String, Summary>>,
        provider: Box<dyn EmbeddingProvider>,
        bm25: Bm25Params,
        options: BuildOptions,
    ) -> Result<Index> {
        bm25.validate()?;
        if let Some(summaries) = summaries {
            let mut missing: Vec<String> = chunks
                .iter()
                .filter(|c| !summaries.contains_key(&c.doc_id))
                .map(|c| c.doc_id.clone())
                .collect();
            if !missing.is_empty() {
                missing.sort();
                missing.dedup();
                return Err(Error::MissingSummaries(missing));
            }
        }

        let sac = match summaries {
            Some(map) => {
                let first = map.values().next();
                SacMeta {
                    enabled: true,
                    strategy: first.map(|s| s.strategy),
                    summary_length: first.map(|s| s.requested_length),
                }
            }
            None => SacMeta {
                enabled: false,
                strategy: None,
                summary_length: None,
            },
        };

        let augmented: Vec<String> = chunks
            .iter()
            .map(|c| match summaries {
                Some(map) => {
                    let summary = &map[&c.doc_id];
                    format!("{}{}{}", summary.text, AUGMENT_SEPARATOR, c.text)
                }
                None => c.text.clone(),
            })
            .collect();

        let vectors = provider.embed_batch(&augmented)?;
        if vectors.len() != chunks.len() {
            return Err(Error::Provider(format!(
                "provider returned {} vectors for {} texts",
                vectors.len(),
                chunks.len()
            )));
        }
        let dim = vectors.first().map(Vector::dim).unwrap_or(0);
        for (i, v) in vectors.iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                });
            }
            debug_assert!(
                v.is_zero() || (v.l2_norm() - 1.0).abs() < 1e-4,
                "vector {i} is not normalized"
            );
        }

        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut token_counts = Vec::with_capacity(chunks.len());
        for (row, text) in augmented.iter().enumerate() {
            let sparse_text: &str = if options.sparse_on_augmented {
                text
            } else {
                &chunks[row].text
            };
            let tokens = tokenize(sparse_text);
            token_counts.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for token in tokens {
                *tf.entry(token).or_insert(0) += 1;
            }
            let mut entries: Vec<(String, u32)> = tf.into_iter().collect();
            entries.sort();
            for (term, count) in entries {
                postings.entry(term).or_default().push((row as u32, count));
            }
        }
        let avgdl = if token_counts.is_empty() {
            0.0
        } else {
            token_counts.iter().map(|&c| f64::from(c)).sum::<f64>() / token_counts.len() as f64
        };

        let chunks = chunks
            .into_iter()
            .zip(augmented)
            .zip(vectors)
            .map(|((chunk, augmented_text), vector)| IndexedChunk {
                chunk,
                augmented_text,
                vector,
            })
            .collect();

        Ok(Index {
            chunks,
            postings,
            token_counts,
            avgdl,
            bm25,
            dim,
            provider,
            sac,
            options,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunk(&self, row: usize) -> &IndexedChunk {
        &self.chunks[row]
    }

    pub fn sac(&self) -> &SacMeta {
        &self.sac
    }

    pub fn bm25_params(&self) -> Bm25Params {
        self.bm25
    }

    pub fn provider_fingerprint(&self) -> String {
        self.provider.fingerprint()
    }

    /// Resolve hits to `(doc_id, original span)` pairs, asserting span
    /// purity: returned spans always lie inside the source document text.
    pub fn resolve(&self, result: &SearchResult) -> Vec<RetrievedSpan> {
        result
            .hits
            .iter()
            .map(|hit| {
                let chunk = &self.chunks[hit.row].chunk;
                debug_assert_eq!(
                    chunk.text.chars().count(),
                    chunk.span.len(),
                    "chunk span does not match its text"
                );
                RetrievedSpan {
                    doc_id: chunk.doc_id.clone(),
                    span: chunk.span,
                    score: hit.score,
                }
            })
            .collect()
    }

    /// Deterministic ranking order: score descending, ties broken by
    /// `(doc_id, span.start)` ascending.
    fn rank(&self, mut scored: Vec<(usize, f64)>, k: usize) -> SearchResult {
        scored.sort_unstable_by(|&(ra, sa), &(rb, sb)| {
            sb.total_cmp(&sa).then_with(|| {
                let ca = &self.chunks[ra].chunk;
                let cb = &self.chunks[rb].chunk;
                ca.doc_id
                    .cmp(&cb.doc_id)
                    .then(ca.span.start.cmp(&cb.span.start))
            })
        });
        scored.truncate(k);
        SearchResult {
            hits: scored
                .into_iter()
                .map(|(row, score)| SearchHit { row, score })
                .collect(),
            k,
        }
    }

    /// Cosine score of the raw query against every chunk.
    fn dense_scores(&self, query: &str) -> Result<Vec<f64>> {
        let query_vec = self
            .provider
            .embed_batch(std::slice::from_ref(&query.to_string()))?
            .pop()
            .ok_or_else(|| Error::Provider("provider returned no vector for query".into()))?;
        self.chunks
            .iter()
            .map(|c| cosine(&query_vec, &c.vector))
            .collect()
    }

    /// Okapi BM25 score of the query against every chunk.
    ///
    /// `idf(t) = ln(N / (df + 0.5) + 1)`; term contribution
    /// `idf · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))`, summed over the
    /// query's token sequence (repeated query tokens count repeatedly).
    fn bm25_scores(&self, query: &str) -> Vec<f64> {
        let mut scores = vec![0.0f64; self.chunks.len()];
        if self.chunks.is_empty() {
            return scores;
        }
        let n = self.chunks.len() as f64;
        let Bm25Params { k1, b } = self.bm25;
        for token in tokenize(query) {
            if let Some(postings) = self.postings.get(&token) {
                let df = postings.len() as f64;
                let idf = (n / (df + 0.5) + 1.0).ln();
                for &(row, tf) in postings {
                    let row = row as usize;
                    let tf = f64::from(tf);
                    let dl = f64::from(self.token_counts[row]);
                    let norm = tf + k1 * (1.0 - b + b * dl / self.avgdl);
                    scores[row] += idf * tf * (k1 + 1.0) / norm;
                }
            }
        }
        scores
    }

    /// Exact top-k by cosine similarity over the whole index.
    pub fn dense_search(&self, query: &str, k: usize) -> Result<SearchResult> {
        let scores = self.dense_scores(query)?;
        Ok(self.rank(scores.into_iter().enumerate().collect(), k))
    }

    /// Top-k by Okapi BM25 over the tokenized augmented texts.
    pub fn bm25_search(&self, query: &str, k: usize) -> SearchResult {
        let scores = self.bm25_scores(query);
        self.rank(scores.into_iter().enumerate().collect(), k)
    }

    /// Weighted fusion: top-`pool` candidates from each retriever are
    /// unioned, each score list is min-max normalized over that union
    /// (constant lists collapse to 0.5), and the convex combination is
    /// ranked. `w_semantic` 1.0 and 0.0 reproduce the pure rankings.
    pub fn hybrid_search(
        &self,
        query: &str,
        k: usize,
        weights: HybridWeights,
        pool: usize,
    ) -> Result<SearchResult> {
        if pool < k {
            return Err(Error::Config(format!(
                "hybrid candidate pool ({pool}) must be >= k ({k})"
            )));
        }
        let dense = self.dense_scores(query)?;
        let sparse = self.bm25_scores(query);

        let top = |scores: &[f64]| -> Vec<usize> {
            self.rank(scores.iter().copied().enumerate().collect(), pool)
                .hits
                .into_iter()
                .map(|h| h.row)
                .collect()
        };
        let mut union: BTreeSet<usize> = top(&dense).into_iter().collect();
        union.extend(top(&sparse));

        let rows: Vec<usize> = union.into_iter().collect();
        let norm_dense = min_max_normalize(&rows, &dense);
        let norm_sparse = min_max_normalize(&rows, &sparse);
        let scored: Vec<(usize, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                (
                    row,
                    weights.w_semantic() * norm_dense[i] + weights.w_keyword() * norm_sparse[i],
                )
            })
            .collect();
        Ok(self.rank(scored, k))
    }

    pub fn search(&self, mode: SearchMode, query: &str, k: usize) -> Result<SearchResult> {
        match mode {
            SearchMode::Dense => self.dense_search(query, k),
            SearchMode::Bm25 => Ok(self.bm25_search(query, k)),
            SearchMode::Hybrid { weights, pool } => self.hybrid_search(query, k, weights, pool),
        }
    }

    /// Persist to a directory: `manifest.json`, `chunks.jsonl`,
    /// `vectors.f32` (row-major little-endian), `postings.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let write = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|source| Error::Io { path, source })
        };

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            dim: self.dim,
            chunk_count: self.chunks.len(),
            bm25: self.bm25,
            provider_fingerprint: self.provider.fingerprint(),
            sac: self.sac.clone(),
            options: self.options,
        };
        write(
            "manifest.json",
            serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
        )?;

        let mut lines = Vec::new();
        for indexed in &self.chunks {
            serde_json::to_writer(&mut lines, indexed).expect("chunk serializes");
            lines.write_all(b"\n").unwrap();
        }
        write("chunks.jsonl", &lines)?;

        let mut raw = Vec::with_capacity(self.chunks.len() * self.dim * 4);
        for indexed in &self.chunks {
            for value in indexed.vector.values() {
                raw.extend_from_slice(&value.to_le_bytes());
            }
        }
        write("vectors.f32", &raw)?;

        let postings_file = PostingsFile {
            postings: self.postings.clone(),
            df: self
                .postings
                .iter()
                .map(|(term, rows)| (term.clone(), rows.len() as u32))
                .collect(),
            avgdl: self.avgdl,
        };
        write(
            "postings.json",
            serde_json::to_string(&postings_file).unwrap().as_bytes(),
        )?;
        Ok(())
    }

    /// Load a persisted index. The provider must match the fingerprint the
    /// index was built with.
    pub fn load(dir: impl AsRef<Path>, provider: Box<dyn EmbeddingProvider>) -> Result<Index> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<Vec<u8>> {
            let path = dir.join(name);
            fs::read(&path).map_err(|source| Error::Io { path, source })
        };

        let manifest: Manifest = serde_json::from_slice(&read("manifest.json")?)
            .map_err(|e| Error::Index(format!("malformed manifest.json: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Index(format!(
                "unknown format_version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        if provider.fingerprint() != manifest.provider_fingerprint {
            return Err(Error::Index(format!(
                "index was built with provider {:?} but {:?} was supplied",
                manifest.provider_fingerprint,
                provider.fingerprint()
            )));
        }

        let chunk_bytes = read("chunks.jsonl")?;
        let mut chunks: Vec<IndexedChunk> = Vec::with_capacity(manifest.chunk_count);
        for (i, line) in BufReader::new(chunk_bytes.as_slice()).lines().enumerate() {
            let line = line.expect("in-memory read");
            if line.trim().is_empty() {
                continue;
            }
            let indexed: IndexedChunk = serde_json::from_str(&line)
                .map_err(|e| Error::Index(format!("chunks.jsonl line {}: {e}", i + 1)))?;
            chunks.push(indexed);
        }
        if chunks.len() != manifest.chunk_count {
            return Err(Error::Index(format!(
                "chunks.jsonl has {} records, manifest says {}",
                chunks.len(),
                manifest.chunk_count
            )));
        }

        let raw = read("vectors.f32")?;
        let expected = manifest.chunk_count * manifest.dim * 4;
        if raw.len() != expected {
            return Err(Error::Index(format!(
                "vectors.f32 is {} bytes, expected {expected}",
                raw.len()
            )));
        }
        for (row, indexed) in chunks.iter_mut().enumerate() {
            let offset = row * manifest.dim * 4;
            let values = raw[offset..offset + manifest.dim * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            indexed.vector = Vector::new(values);
        }

        let postings_file: PostingsFile = serde_json::from_slice(&read("postings.json")?)
            .map_err(|e| Error::Index(format!("malformed postings.json: {e}")))?;
        let mut token_counts = vec![0u32; manifest.chunk_count];
        for rows in postings_file.postings.values() {
            for &(row, tf) in rows {
                let row = row as usize;
                if row >= token_counts.len() {
                    return Err(Error::Index(format!(
                        "postings reference row {row} beyond chunk count {}",
                        manifest.chunk_count
                    )));
                }
                token_counts[row] += tf;
            }
        }

        Ok(Index {
            chunks,
            postings: postings_file.postings,
            token_counts,
            avgdl: postings_file.avgdl,
            bm25: manifest.bm25,
            dim: manifest.dim,
            provider,
            sac: manifest.sac,
            options: manifest.options,
        })
    }
}

/// Min-max normalize `scores` restricted to `rows`; a constant list maps to
/// all 0.5.
fn min_max_normalize(rows: &[usize], scores: &[f64]) -> Vec<f64> {
    let values: Vec<f64> = rows.iter().map(|&r| scores[r]).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= lo {
        return vec![0.5; values.len()];
    }
    values.into_iter().map(|v| (v - lo) / (hi - lo)).collect()
}
