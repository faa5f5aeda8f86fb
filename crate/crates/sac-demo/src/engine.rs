//! Demo engine: synthetic corpus + two in-memory indexes, queried from JS.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use sac_core::chunking::{split_corpus, ChunkConfig};
use sac_core::corpus::BenchmarkCase;
use sac_core::embedding::HashEmbedder;
use sac_core::evaluation::{char_precision_recall, drm};
use sac_core::index::{Bm25Params, HybridWeights, Index, SearchMode};
use sac_core::summary::{summarize_corpus, StubChat, Summary, SummaryConfig};
use sac_core::synthetic::{generate, SyntheticSpec};

struct DemoState {
    cases: Vec<BenchmarkCase>,
    baseline: Index,
    augmented: Index,
}

thread_local! {
    static STATE: RefCell<Option<DemoState>> = const { RefCell::new(None) };
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct InitRequest {
    n_docs: usize,
    chunk_size: usize,
    summary_length: usize,
    seed: u64,
    question_per_doc: usize,
    dim: usize,
}

impl Default for InitRequest {
    fn default() -> Self {
        InitRequest {
            n_docs: 20,
            chunk_size: 200,
            summary_length: 150,
            seed: 0,
            question_per_doc: 2,
            dim: 256,
        }
    }
}

#[derive(Serialize)]
struct InitResponse {
    docs: usize,
    chunks: usize,
    cases: usize,
    doc_chars: usize,
    queries: Vec<QueryInfo>,
    doc_ids: Vec<String>,
}

#[derive(Serialize)]
struct QueryInfo {
    query: String,
    doc_id: String,
}

/// Build the corpus and both indexes. Returns corpus statistics and the
/// benchmark queries so the page can offer them as suggestions.
pub fn init(spec_json: &str) -> Result<String, String> {
    let request: InitRequest = if spec_json.trim().is_empty() {
        InitRequest::default()
    } else {
        serde_json::from_str(spec_json).map_err(|e| format!("bad init request: {e}"))?
    };
    let spec = SyntheticSpec {
        n_docs: request.n_docs,
        slot_entropy: request.n_docs.clamp(64, 800),
        seed: request.seed,
        question_per_doc: request.question_per_doc,
        ..SyntheticSpec::default()
    };
    let (corpus, cases) = generate(&spec).map_err(|e| e.to_string())?;

    let chunk_config = ChunkConfig::new(request.chunk_size, 0);
    let chunks = split_corpus(&corpus, &chunk_config).map_err(|e| e.to_string())?;

    let summary_config = SummaryConfig {
        char_length: request.summary_length,
        ..SummaryConfig::default()
    };
    let summaries: BTreeMap<String, Summary> =
        summarize_corpus(&corpus, &summary_config, &StubChat, None, 1)
            .map_err(|e| e.to_string())?;

    let provider = || Box::new(HashEmbedder::new(request.dim, 3));
    let baseline = Index::build(chunks.clone(), None, provider(), Bm25Params::default())
        .map_err(|e| e.to_string())?;
    let augmented = Index::build(chunks, Some(&summaries), provider(), Bm25Params::default())
        .map_err(|e| e.to_string())?;

    let response = InitResponse {
        docs: corpus.len(),
        chunks: baseline.len(),
        cases: cases.len(),
        doc_chars: corpus.documents().map(|d| d.len()).sum(),
        queries: cases
            .iter()
            .map(|c| QueryInfo {
                query: c.query.clone(),
                doc_id: c.ground_truth[0].0.clone(),
            })
            .collect(),
        doc_ids: corpus.documents().map(|d| d.doc_id().to_string()).collect(),
    };
    let body = serde_json::to_string(&response).expect("response serializes");
    STATE.with(|state| {
        *state.borrow_mut() = Some(DemoState {
            cases,
            baseline,
            augmented,
        })
    });
    Ok(body)
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    query: String,
    #[serde(default = "default_k")]
    k: usize,
    /// 1.0 = pure dense; anything lower fuses BM25 with weight 1 - w.
    #[serde(default = "default_w")]
    w_semantic: f64,
}

fn default_k() -> usize {
    5
}

fn default_w() -> f64 {
    1.0
}

#[derive(Serialize)]
struct Hit {
    doc_id: String,
    start: usize,
    end: usize,
    score: f64,
    snippet: String,
}

#[derive(Serialize)]
struct QueryResponse {
    baseline: Vec<Hit>,
    augmented: Vec<Hit>,
}

/// Search both indexes with the same query and parameters.
pub fn query(request_json: &str) -> Result<String, String> {
    let request: QueryRequest =
        serde_json::from_str(request_json).map_err(|e| format!("bad query request: {e}"))?;
    if request.query.trim().is_empty() {
        return Err("query text is empty".into());
    }
    let k = request.k.clamp(1, 50);
    STATE.with(|state| {
        let state = state.borrow();
        let state = state.as_ref().ok_or("call demo_init first")?;
        let mode = if request.w_semantic >= 1.0 {
            SearchMode::Dense
        } else {
            SearchMode::Hybrid {
                weights: HybridWeights::new(request.w_semantic.max(0.0))
                    .map_err(|e| e.to_string())?,
                pool: state.baseline.len().max(k),
            }
        };
        let run = |index: &Index| -> Result<Vec<Hit>, String> {
            let result = index.search(mode, &request.query, k).map_err(|e| e.to_string())?;
            Ok(result
                .hits
                .iter()
                .map(|hit| {
                    let chunk = &index.chunk(hit.row).chunk;
                    Hit {
                        doc_id: chunk.doc_id.clone(),
                        start: chunk.span.start,
                        end: chunk.span.end,
                        score: hit.score,
                        snippet: chunk.text.chars().take(160).collect(),
                    }
                })
                .collect())
        };
        let response = QueryResponse {
            baseline: run(&state.baseline)?,
            augmented: run(&state.augmented)?,
        };
        Ok(serde_json::to_string(&response).expect("response serializes"))
    })
}

#[derive(Serialize)]
struct CurveSet {
    drm: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
}

#[derive(Serialize)]
struct CurvesResponse {
    k: Vec<usize>,
    baseline: CurveSet,
    augmented: CurveSet,
}

/// DRM / precision / recall means over the benchmark, per k, both indexes.
pub fn curves() -> Result<String, String> {
    STATE.with(|state| {
        let state = state.borrow();
        let state = state.as_ref().ok_or("call demo_init first")?;
        let k_list: Vec<usize> = sac_core::evaluation::default_k_list()
            .into_iter()
            .filter(|&k| k <= state.baseline.len().max(1))
            .collect();
        let max_k = *k_list.last().ok_or("index is empty")?;

        let run = |index: &Index| -> Result<CurveSet, String> {
            let mut sums = vec![(0.0f64, 0.0f64, 0.0f64); k_list.len()];
            for case in &state.cases {
                let full = index
                    .search(SearchMode::Dense, &case.query, max_k)
                    .map_err(|e| e.to_string())?;
                for (i, &k) in k_list.iter().enumerate() {
                    let retrieved = index.resolve(&full.prefix(k));
                    let (precision, recall) = char_precision_recall(&retrieved, case);
                    sums[i].0 += drm(&retrieved, case);
                    sums[i].1 += precision;
                    sums[i].2 += recall;
                }
            }
            let n = state.cases.len().max(1) as f64;
            Ok(CurveSet {
                drm: sums.iter().map(|s| s.0 / n).collect(),
                precision: sums.iter().map(|s| s.1 / n).collect(),
                recall: sums.iter().map(|s| s.2 / n).collect(),
            })
        };
        let response = CurvesResponse {
            k: k_list.clone(),
            baseline: run(&state.baseline)?,
            augmented: run(&state.augmented)?,
        };
        Ok(serde_json::to_string(&response).expect("response serializes"))
    })
}
