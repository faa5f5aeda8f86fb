//! Per-document summaries ("document fingerprints").
//!
//! A chat-completion backend produces one short summary per document; the
//! length contract (`char_length` + `tolerance`) is enforced by regenerating
//! with a reduced target, and a file cache keyed by the full generation
//! parameters makes corpus runs resumable and sweep cells shareable.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::embedding::Fnv64;
use crate::error::{Error, Result};
use crate::prompts;

/// Floor for the reduced regeneration target.
const MIN_RETRY_TARGET: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryStrategy {
    Generic,
    Expert,
}

impl SummaryStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            SummaryStrategy::Generic => "generic",
            SummaryStrategy::Expert => "expert",
        }
    }
}

impl std::str::FromStr for SummaryStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(SummaryStrategy::Generic),
            "expert" => Ok(SummaryStrategy::Expert),
            other => Err(Error::Config(format!(
                "unknown summary strategy {other:?} (expected \"generic\" or \"expert\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryConfig {
    pub strategy: SummaryStrategy,
    /// Target summary length in characters.
    pub char_length: usize,
    /// Accepted overshoot beyond the target.
    pub tolerance: usize,
    /// Length-driven regeneration attempts after the first call.
    pub max_retries: usize,
    /// Sampling seed forwarded to the backend and folded into cache keys.
    pub seed: Option<u64>,
    pub model_id: String,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            strategy: SummaryStrategy::Generic,
            char_length: 150,
            tolerance: 20,
            max_retries: 3,
            seed: None,
            model_id: "stub".into(),
        }
    }
}

impl SummaryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.char_length < 1 {
            return Err(Error::Config("summary char_length must be >= 1".into()));
        }
        Ok(())
    }

    fn limit(&self) -> usize {
        self.char_length + self.tolerance
    }
}

/// A generated document fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub doc_id: String,
    pub text: String,
    pub strategy: SummaryStrategy,
    /// The configured target length (not the reduced retry targets).
    pub requested_length: usize,
    pub attempts: usize,
    pub model_id: String,
    /// True when retries were exhausted and the text was cut at a word
    /// boundary to fit the limit.
    pub truncated: bool,
}

/// One chat-completion call. `doc_id`, `document_text`, and `target_chars`
/// are request metadata consumed by deterministic stub backends; HTTP
/// backends only forward `model`, the messages, and `seed`.
#[derive(Debug)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub system: &'a str,
    pub user: &'a str,
    pub seed: Option<u64>,
    pub target_chars: usize,
    pub doc_id: &'a str,
    pub document_text: &'a str,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String>;
}

/// Offline deterministic backend: emits
/// `"<doc_id> | <first line of the document>"` trimmed to the target length,
/// so every "summary" is reproducible and uniquely identifies its document.
#[derive(Debug, Default, Clone)]
pub struct StubChat;

impl ChatBackend for StubChat {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String> {
        let first_line = request.document_text.lines().next().unwrap_or("");
        let raw = format!("{} | {}", request.doc_id, first_line);
        Ok(raw.chars().take(request.target_chars).collect())
    }
}

/// Render the prompt pair for a strategy.
pub fn render_prompt(
    strategy: SummaryStrategy,
    char_length: usize,
    document_text: &str,
) -> Result<(String, String)> {
    if document_text.is_empty() {
        return Err(Error::Config(
            "cannot render a summarization prompt for an empty document".into(),
        ));
    }
    let (system, template) = match strategy {
        SummaryStrategy::Generic => (prompts::GENERIC_SYSTEM, prompts::GENERIC_USER_TEMPLATE),
        SummaryStrategy::Expert => (prompts::EXPERT_SYSTEM, prompts::EXPERT_USER_TEMPLATE),
    };
    Ok((
        system.to_string(),
        prompts::fill(template, char_length, document_text),
    ))
}

/// File cache: one JSON record per (document, strategy, length, model, seed).
#[derive(Debug, Clone)]
pub struct SummaryCache {
    dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    seed: Option<u64>,
    summary: Summary,
}

impl SummaryCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SummaryCache { dir: dir.into() }
    }

    fn path(&self, doc_id: &str, config: &SummaryConfig) -> PathBuf {
        let mut h = Fnv64::new();
        h.update(doc_id.as_bytes());
        h.update(&[0]);
        h.update(&(config.char_length as u64).to_le_bytes());
        h.update(config.model_id.as_bytes());
        h.update(&[0]);
        h.update(&config.seed.map(|s| s.wrapping_add(1)).unwrap_or(0).to_le_bytes());
        self.dir
            .join(config.strategy.as_str())
            .join(format!("{:016x}.json", h.finish()))
    }

    pub fn get(&self, doc_id: &str, config: &SummaryConfig) -> Option<Summary> {
        let path = self.path(doc_id, config);
        let raw = fs::read_to_string(&path).ok()?;
        let record: CacheRecord = match serde_json::from_str(&raw) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("discarding corrupt summary cache entry {}: {e}", path.display());
                return None;
            }
        };
        let s = &record.summary;
        let matches = s.doc_id == doc_id
            && s.strategy == config.strategy
            && s.requested_length == config.char_length
            && s.model_id == config.model_id
            && record.seed == config.seed;
        matches.then_some(record.summary)
    }

    pub fn put(&self, summary: &Summary, config: &SummaryConfig) -> Result<()> {
        let path = self.path(&summary.doc_id, config);
        let parent = path.parent().expect("cache paths have parents");
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
        let record = CacheRecord {
            seed: config.seed,
            summary: summary.clone(),
        };
        let body = serde_json::to_string_pretty(&record).expect("summary serializes");
        // Atomic publish: write a temp file, then rename into place.
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, body).map_err(|source| Error::Io {
            path: tmp.clone(),
            source,
        })?;
        fs::rename(&tmp, &path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(())
    }
}

/// Summarize one document, enforcing the length contract.
///
/// Outputs longer than `char_length + tolerance` are regenerated with the
/// target reduced by the observed overflow (floored at 40 characters). When
/// retries run out, the last output is cut at a word boundary within the
/// limit and the summary is flagged as truncated.
pub fn summarize_document(
    document: &Document,
    config: &SummaryConfig,
    backend: &dyn ChatBackend,
) -> Result<Summary> {
    config.validate()?;
    let limit = config.limit();
    let mut target = config.char_length;
    let mut last_output = String::new();
    let total_attempts = config.max_retries + 1;

    for attempt in 1..=total_attempts {
        let (system, user) = render_prompt(config.strategy, target, document.text())?;
        let request = ChatRequest {
            model: &config.model_id,
            system: &system,
            user: &user,
            seed: config.seed,
            target_chars: target,
            doc_id: document.doc_id(),
            document_text: document.text(),
        };
        let output = backend.complete(&request)?;
        if output.is_empty() {
            return Err(Error::Backend {
                doc_id: document.doc_id().to_string(),
                message: "backend returned empty output".into(),
            });
        }
        let n = output.chars().count();
        if n <= limit {
            return Ok(Summary {
                doc_id: document.doc_id().to_string(),
                text: output,
                strategy: config.strategy,
                requested_length: config.char_length,
                attempts: attempt,
                model_id: config.model_id.clone(),
                truncated: false,
            });
        }
        log::debug!(
            "{}: summary attempt {attempt} returned {n} chars (limit {limit}); retrying",
            document.doc_id()
        );
        let overflow = n - limit;
        target = target.saturating_sub(overflow).max(MIN_RETRY_TARGET);
        last_output = output;
    }

    Ok(Summary {
        doc_id: document.doc_id().to_string(),
        text: truncate_at_word_boundary(&last_output, limit),
        strategy: config.strategy,
        requested_length: config.char_length,
        attempts: total_attempts,
        model_id: config.model_id.clone(),
        truncated: true,
    })
}

/// Cut to at most `limit` characters, preferring the last word boundary.
fn truncate_at_word_boundary(text: &str, limit: usize) -> String {
    let prefix: String = text.chars().take(limit).collect();
    if text.chars().count() <= limit {
        return prefix;
    }
    match prefix.rfind(char::is_whitespace) {
        Some(pos) if pos > 0 => prefix[..pos].trim_end().to_string(),
        _ => prefix,
    }
}

/// Summarize a whole corpus, cache-first.
///
/// Failures are collected per document; the successful summaries are still
/// cached, and an error listing every failed document is returned at the end
/// so one stubborn document cannot abort a long run.
pub fn summarize_corpus(
    corpus: &Corpus,
    config: &SummaryConfig,
    backend: &dyn ChatBackend,
    cache: Option<&SummaryCache>,
    concurrency: usize,
) -> Result<BTreeMap<String, Summary>> {
    config.validate()?;
    let total = corpus.len();
    let mut summaries = BTreeMap::new();
    let mut pending: Vec<&Document> = Vec::new();
    for doc in corpus.documents() {
        match cache.and_then(|c| c.get(doc.doc_id(), config)) {
            Some(summary) => {
                summaries.insert(doc.doc_id().to_string(), summary);
            }
            None => pending.push(doc),
        }
    }
    log::info!(
        "summarizing corpus: {} cached, {} to generate",
        summaries.len(),
        pending.len()
    );

    let results: Vec<(String, Result<Summary>)> = if concurrency <= 1 || pending.len() <= 1 {
        pending
            .iter()
            .map(|doc| {
                (
                    doc.doc_id().to_string(),
                    summarize_document(doc, config, backend),
                )
            })
            .collect()
    } else {
        run_bounded(&pending, concurrency, |doc| {
            summarize_document(doc, config, backend)
        })
    };

    let mut failures = Vec::new();
    let mut done = summaries.len();
    for (doc_id, result) in results {
        match result {
            Ok(summary) => {
                if let Some(cache) = cache {
                    cache.put(&summary, config)?;
                }
                summaries.insert(doc_id, summary);
                done += 1;
                if done % 50 == 0 || done == total {
                    log::info!("summaries: {done}/{total}");
                }
            }
            Err(e) => failures.push((doc_id, e.to_string())),
        }
    }

    if failures.is_empty() {
        Ok(summaries)
    } else {
        Err(Error::SummarizeFailures(failures))
    }
}

/// Run `f` over `items` with at most `workers` threads, preserving order.
fn run_bounded<'a, T: Sync + HasId, R: Send>(
    items: &'a [&'a T],
    workers: usize,
    f: impl Fn(&'a T) -> R + Sync,
) -> Vec<(String, R)> {
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Option<(String, R)>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(items.len()) {
            scope.spawn(|| loop {
                let i = {
                    let mut guard = next.lock().unwrap();
                    let i = *guard;
                    if i >= items.len() {
                        break;
                    }
                    *guard += 1;
                    i
                };
                let out = f(items[i]);
                results.lock().unwrap()[i] = Some((items[i].id().to_string(), out));
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every work item completes"))
        .collect()
}

trait HasId {
    fn id(&self) -> &str;
}

impl HasId for Document {
    fn id(&self) -> &str {
        self.doc_id()
    }
}
