//! Embedding providers and vector primitives.
//!
//! Two providers share one trait: a remote HTTP service speaking the common
//! `/v1/embeddings` wire shape (behind the `remote` feature), and a local
//! feature-hashing embedder over character n-grams that is fully
//! deterministic across runs and platforms. The hash embedder is what makes
//! the offline experiments and oracle tests reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FNV-1a 64-bit offset basis.
pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
/// Offset basis for the independent sign hash (standard basis XOR 2^64/phi).
const FNV_SIGN_OFFSET: u64 = FNV_OFFSET ^ 0x9e37_79b9_7f4a_7c15;

/// Incremental FNV-1a 64-bit hasher. Not a cryptographic hash; used for
/// stable bucketing, cache keys, and content fingerprints.
#[derive(Debug, Clone)]
pub struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(FNV_OFFSET)
    }

    pub fn with_offset(offset: u64) -> Self {
        Fnv64(offset)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Self::new()
    }
}

/// One-shot FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = Fnv64::new();
    h.update(bytes);
    h.finish()
}

/// A finite real vector, L2-normalized after embedding except for the
/// all-zero vector, which stays zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f32>);

impl Vector {
    pub fn new(values: Vec<f32>) -> Self {
        Vector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Scale to unit L2 norm; the zero vector is left as-is.
    pub fn normalize(&mut self) {
        let norm = self.l2_norm();
        if norm > 0.0 {
            for v in &mut self.0 {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
    }
}

/// Cosine similarity in `[-1, 1]`, accumulated in f64.
///
/// By convention a zero vector scores 0 against anything (so degenerate
/// inputs rank last instead of propagating NaN).
pub fn cosine(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut dot = 0.0f64;
    for (&x, &y) in a.values().iter().zip(b.values()) {
        dot += f64::from(x) * f64::from(y);
    }
    let na = a.l2_norm();
    let nb = b.l2_norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Deterministic character n-gram feature hashing.
///
/// The text is lowercased; every n-gram of `ngram` characters increments
/// bucket `fnv1a64(ngram) mod dim`, signed by one bit of a second FNV hash
/// with a different offset basis; the result is L2-normalized. Texts shorter
/// than `ngram` characters produce the zero vector.
pub fn hash_embed(text: &str, dim: usize, ngram: usize) -> Vector {
    debug_assert!(dim >= 1 && ngram >= 1);
    let lowered = text.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    if chars.len() < ngram {
        return Vector::zeros(dim);
    }
    let mut acc = vec![0.0f64; dim];
    let mut buf = String::with_capacity(ngram * 4);
    for window in chars.windows(ngram) {
        buf.clear();
        buf.extend(window.iter());
        let bytes = buf.as_bytes();
        let bucket = (fnv1a64(bytes) % dim as u64) as usize;
        let mut sign_hash = Fnv64::with_offset(FNV_SIGN_OFFSET);
        sign_hash.update(bytes);
        let sign = if sign_hash.finish() & 1 == 1 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut acc {
            *v /= norm;
        }
    }
    Vector(acc.into_iter().map(|v| v as f32).collect())
}

/// Anything that can turn texts into unit vectors.
pub trait EmbeddingProvider: Send + Sync {
    /// Embed each text, preserving order. Every returned vector is
    /// normalized; the zero vector is allowed only for degenerate inputs
    /// (shorter than the n-gram width, or empty).
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>>;

    /// Stable identifier covering everything that changes the vectors
    /// (kind, model, dimensions). Stored in index manifests and cache keys.
    fn fingerprint(&self) -> String;
}

/// Local feature-hashing embedder.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub dim: usize,
    pub ngram: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize, ngram: usize) -> Self {
        HashEmbedder { dim, ngram }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 256, ngram: 3 }
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        Ok(texts
            .iter()
            .map(|t| {
                let v = hash_embed(t, self.dim, self.ngram);
                if v.is_zero() && !t.trim().is_empty() {
                    log::warn!("hash embedding produced zero vector for short text {t:?}");
                }
                v
            })
            .collect())
    }

    fn fingerprint(&self) -> String {
        format!("hash:dim={}:ngram={}", self.dim, self.ngram)
    }
}

/// Which provider implementation to construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Hash,
    Remote,
}

/// Declarative provider selection, deserialized from run configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingProviderConfig {
    pub kind: ProviderKind,
    /// Remote model identifier (ignored by the hash provider).
    pub model_id: Option<String>,
    /// Remote service base URL, e.g. `http://localhost:8080`.
    pub base_url: Option<String>,
    pub dim: usize,
    pub ngram: usize,
    pub batch_size: usize,
    /// Maximum in-flight remote requests.
    pub concurrency: usize,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig {
            kind: ProviderKind::Hash,
            model_id: None,
            base_url: None,
            dim: 256,
            ngram: 3,
            batch_size: 16,
            concurrency: 4,
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 8 {
            return Err(Error::Config("provider dim must be >= 8".into()));
        }
        if self.ngram < 1 {
            return Err(Error::Config("provider ngram must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("provider batch_size must be >= 1".into()));
        }
        if self.kind == ProviderKind::Remote {
            if self.base_url.is_none() {
                return Err(Error::Config(
                    "remote provider requires base_url".into(),
                ));
            }
            if self.model_id.is_none() {
                return Err(Error::Config(
                    "remote provider requires model_id".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        match self.kind {
            ProviderKind::Hash => Ok(Box::new(HashEmbedder::new(self.dim, self.ngram))),
            #[cfg(feature = "remote")]
            ProviderKind::Remote => Ok(Box::new(crate::remote::RemoteEmbedder::from_config(
                self,
            )?)),
            #[cfg(not(feature = "remote"))]
            ProviderKind::Remote => Err(Error::Config(
                "built without the `remote` feature; only the hash provider is available".into(),
            )),
        }
    }
}
