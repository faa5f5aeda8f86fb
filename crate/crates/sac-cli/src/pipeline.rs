//! Pipeline stages shared by the subcommands and the sweep runner.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sac_core::chunking::split_corpus;
use sac_core::corpus::{load_benchmark_with_unit, BenchmarkCase, Corpus};
use sac_core::embedding::{EmbeddingProvider, Fnv64, Vector};
use sac_core::error::Error;
use sac_core::evaluation::{self, EvalOutcome, MetricsRow, RunMeta};
use sac_core::index::{BuildOptions, Index};
use sac_core::summary::{
    summarize_corpus, ChatBackend, StubChat, Summary, SummaryCache, SummaryConfig,
};

use crate::config::{RunConfig, SummaryBackendKind};
use crate::stages::{config_hash, StageOutcome, StageRunner};
use crate::AppError;

/// Embedding provider wrapper with a content-addressed file cache, so sweep
/// cells re-embedding identical augmented texts hit disk instead of the
/// backend. Transparent: the fingerprint is the inner provider's.
pub struct CachedProvider {
    inner: Box<dyn EmbeddingProvider>,
    dir: PathBuf,
    lock: Mutex<()>,
}

impl CachedProvider {
    pub fn new(inner: Box<dyn EmbeddingProvider>, cache_root: &Path) -> Self {
        let mut h = Fnv64::new();
        h.update(inner.fingerprint().as_bytes());
        CachedProvider {
            inner,
            dir: cache_root.join(format!("{:016x}", h.finish())),
            lock: Mutex::new(()),
        }
    }

    fn entry_path(&self, text: &str) -> PathBuf {
        let mut h = Fnv64::new();
        h.update(text.as_bytes());
        self.dir
            .join(format!("{:016x}-{}.json", h.finish(), text.len()))
    }

    fn read_entry(&self, text: &str) -> Option<Vector> {
        let raw = fs::read_to_string(self.entry_path(text)).ok()?;
        serde_json::from_str::<Vec<f32>>(&raw).ok().map(Vector::new)
    }

    fn write_entry(&self, text: &str, vector: &Vector) -> Result<(), Error> {
        let path = self.entry_path(text);
        let parent = path.parent().unwrap();
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(vector.values()).unwrap()).map_err(|source| {
            Error::Io {
                path: tmp.clone(),
                source,
            }
        })?;
        fs::rename(&tmp, &path).map_err(|source| Error::Io { path, source })?;
        Ok(())
    }
}

impl EmbeddingProvider for CachedProvider {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>, Error> {
        let _guard = self.lock.lock().unwrap();
        let mut out: Vec<Option<Vector>> = texts.iter().map(|t| self.read_entry(t)).collect();
        let misses: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !misses.is_empty() {
            let miss_texts: Vec<String> = misses.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.inner.embed_batch(&miss_texts)?;
            for (&i, vector) in misses.iter().zip(&vectors) {
                self.write_entry(&texts[i], vector)?;
                out[i] = Some(vector.clone());
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

/// Everything one run needs, wired from the config.
pub struct Pipeline<'a> {
    pub config: &'a RunConfig,
    pub workdir: PathBuf,
    pub runner: StageRunner,
}

impl<'a> Pipeline<'a> {
    pub fn new(config: &'a RunConfig, workdir: Option<PathBuf>, force: bool) -> Self {
        let workdir = workdir.unwrap_or_else(|| config.workdir.clone());
        let runner = StageRunner::new(&workdir, force);
        Pipeline {
            config,
            workdir,
            runner,
        }
    }

    pub fn load_corpus(&self) -> Result<Corpus, AppError> {
        Ok(Corpus::load(&self.config.corpus_root)?)
    }

    pub fn load_cases(&self, corpus: &Corpus) -> Result<Vec<BenchmarkCase>, AppError> {
        Ok(load_benchmark_with_unit(
            &self.config.benchmark_file,
            corpus,
            self.config.span_unit,
        )?)
    }

    pub fn chat_backend(&self) -> Result<Box<dyn ChatBackend>, AppError> {
        match self.config.summary.backend {
            SummaryBackendKind::Stub => Ok(Box::new(StubChat)),
            SummaryBackendKind::Remote => {
                let base_url = self.config.summary.base_url.as_deref().ok_or_else(|| {
                    AppError::Validation("summary.backend = \"remote\" requires base_url".into())
                })?;
                Ok(Box::new(sac_core::remote::HttpChatBackend::new(base_url)))
            }
        }
    }

    pub fn provider(&self) -> Result<Box<dyn EmbeddingProvider>, AppError> {
        let inner = self.config.provider.build()?;
        Ok(Box::new(CachedProvider::new(
            inner,
            &self.workdir.join("cache").join("embeddings"),
        )))
    }

    pub fn summary_cache(&self) -> SummaryCache {
        SummaryCache::new(self.workdir.join("summaries"))
    }

    fn summary_config_for_seed(&self, seed: u64) -> SummaryConfig {
        let mut config = self.config.summary.config.clone();
        config.seed = Some(seed);
        config
    }

    pub fn index_dir(&self, seed: u64) -> PathBuf {
        self.workdir
            .join("index")
            .join(self.config.strategy_label())
            .join(format!("seed-{seed}"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.workdir.join("reports")
    }

    // --- stage hash fragments -------------------------------------------

    fn ingest_hash(&self) -> String {
        config_hash(&(
            &self.config.corpus_root,
            &self.config.benchmark_file,
            self.config.span_unit,
        ))
    }

    fn summarize_hash(&self, seed: u64) -> String {
        config_hash(&(&self.config.summary, seed))
    }

    fn index_hash(&self, seed: u64) -> String {
        config_hash(&(
            &self.config.chunk,
            &self.config.provider,
            &self.config.bm25,
            self.config.sparse_on_augmented,
            self.config.summary.enabled,
            self.config.strategy_label(),
            seed,
        ))
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            sparse_on_augmented: self.config.sparse_on_augmented,
        }
    }

    fn evaluate_hash(&self) -> String {
        config_hash(&(
            &self.config.k_list,
            &self.config.seeds,
            self.config.strategy_label(),
            self.config.hybrid.enabled,
            self.config.hybrid.w_semantic,
            self.config.hybrid.pool,
        ))
    }

    // --- stages ----------------------------------------------------------

    /// Load + validate corpus and benchmark; record corpus statistics.
    pub fn stage_ingest(&self) -> Result<StageOutcome, AppError> {
        let out_path = self.workdir.join("ingest.json");
        self.runner.run(
            "ingest",
            self.ingest_hash(),
            &[],
            false,
            || out_path.exists(),
            || {
                let corpus = self.load_corpus()?;
                let cases = self.load_cases(&corpus)?;
                let mut datasets: Vec<&str> =
                    cases.iter().map(|c| c.dataset_tag.as_str()).collect();
                datasets.sort();
                datasets.dedup();
                let stats = serde_json::json!({
                    "corpus_fingerprint": corpus.fingerprint(),
                    "documents": corpus.len(),
                    "total_chars": corpus.documents().map(|d| d.len()).sum::<usize>(),
                    "cases": cases.len(),
                    "datasets": datasets,
                });
                fs::create_dir_all(&self.workdir).map_err(|e| {
                    AppError::Runtime(format!("cannot create {}: {e}", self.workdir.display()))
                })?;
                fs::write(&out_path, serde_json::to_string_pretty(&stats).unwrap())
                    .map_err(|e| AppError::Runtime(format!("cannot write ingest.json: {e}")))?;
                log::info!(
                    "ingest: {} documents, {} cases",
                    corpus.len(),
                    cases.len()
                );
                Ok(())
            },
        )
    }

    /// Generate (or reuse) summaries for one seed.
    pub fn stage_summarize(
        &self,
        corpus: &Corpus,
        seed: u64,
        upstream_refreshed: bool,
    ) -> Result<StageOutcome, AppError> {
        if !self.config.summary.enabled {
            return Ok(StageOutcome::Skipped);
        }
        let summary_config = self.summary_config_for_seed(seed);
        let cache = self.summary_cache();
        let stage = format!("summarize-seed{seed}");
        self.runner.run(
            &stage,
            self.summarize_hash(seed),
            &[("ingest", self.ingest_hash())],
            upstream_refreshed,
            || {
                corpus
                    .documents()
                    .all(|d| cache.get(d.doc_id(), &summary_config).is_some())
            },
            || {
                let backend = self.chat_backend()?;
                summarize_corpus(
                    corpus,
                    &summary_config,
                    backend.as_ref(),
                    Some(&cache),
                    self.config.summary.concurrency,
                )?;
                Ok(())
            },
        )
    }

    /// Collect the summaries the index build needs (None when SAC is off).
    pub fn summaries(
        &self,
        corpus: &Corpus,
        seed: u64,
    ) -> Result<Option<BTreeMap<String, Summary>>, AppError> {
        if !self.config.summary.enabled {
            return Ok(None);
        }
        let summary_config = self.summary_config_for_seed(seed);
        let cache = self.summary_cache();
        let backend = self.chat_backend()?;
        Ok(Some(summarize_corpus(
            corpus,
            &summary_config,
            backend.as_ref(),
            Some(&cache),
            self.config.summary.concurrency,
        )?))
    }

    /// Build and persist the index for one seed.
    pub fn stage_index(
        &self,
        corpus: &Corpus,
        seed: u64,
        upstream_refreshed: bool,
    ) -> Result<StageOutcome, AppError> {
        let dir = self.index_dir(seed);
        let mut upstream = vec![("ingest", self.ingest_hash())];
        let summarize_stage = format!("summarize-seed{seed}");
        if self.config.summary.enabled {
            upstream.push((summarize_stage.as_str(), self.summarize_hash(seed)));
        }
        self.runner.run(
            &format!("index-{}-seed{seed}", self.config.strategy_label()),
            self.index_hash(seed),
            &upstream,
            upstream_refreshed,
            || dir.join("manifest.json").exists(),
            || {
                let summaries = self.summaries(corpus, seed)?;
                let chunks = split_corpus(corpus, &self.config.chunk)?;
                let index = Index::build_with_options(
                    chunks,
                    summaries.as_ref(),
                    self.provider()?,
                    self.config.bm25,
                    self.build_options(),
                )?;
                index.save(&dir)?;
                log::info!(
                    "index ({}, seed {seed}): {} chunks -> {}",
                    self.config.strategy_label(),
                    index.len(),
                    dir.display()
                );
                Ok(())
            },
        )
    }

    pub fn load_index(&self, seed: u64) -> Result<Index, AppError> {
        let dir = self.index_dir(seed);
        if !dir.join("manifest.json").exists() {
            return Err(AppError::Validation(format!(
                "no index at {} — run `sac index` first",
                dir.display()
            )));
        }
        Ok(Index::load(&dir, self.provider()?)?)
    }

    /// Evaluate one seed against an index built in memory or loaded from disk.
    pub fn evaluate_seed(
        &self,
        index: &Index,
        cases: &[BenchmarkCase],
        seed: u64,
    ) -> Result<EvalOutcome, AppError> {
        let meta = RunMeta {
            strategy: self.config.strategy_label(),
            chunk_size: self.config.chunk.chunk_size,
            summary_length: self
                .config
                .summary
                .enabled
                .then_some(self.config.summary.config.char_length),
            seed,
        };
        Ok(evaluation::evaluate_run(
            index,
            self.config.search_mode()?,
            cases,
            &self.config.k_list,
            &meta,
        )?)
    }

    /// Full evaluation across all configured seeds, writing the reports.
    pub fn stage_evaluate(
        &self,
        cases: &[BenchmarkCase],
        upstream_refreshed: bool,
    ) -> Result<StageOutcome, AppError> {
        let mut upstream = vec![("ingest", self.ingest_hash())];
        let index_stages: Vec<(String, String)> = self
            .config
            .seeds
            .iter()
            .map(|&seed| {
                (
                    format!("index-{}-seed{seed}", self.config.strategy_label()),
                    self.index_hash(seed),
                )
            })
            .collect();
        for (name, hash) in &index_stages {
            upstream.push((name.as_str(), hash.clone()));
        }
        let reports = self.reports_dir();
        let outcome = self.runner.run(
            "evaluate",
            self.evaluate_hash(),
            &upstream,
            upstream_refreshed,
            || reports.join("rows.json").exists(),
            || {
                let mut all_rows: Vec<MetricsRow> = Vec::new();
                let mut flagged = Vec::new();
                for &seed in &self.config.seeds {
                    let index = self.load_index(seed)?;
                    let outcome = self.evaluate_seed(&index, cases, seed)?;
                    flagged.extend(outcome.failed_cases);
                    all_rows.extend(outcome.rows);
                }
                write_rows_and_report(&all_rows, &flagged, &reports)?;
                log::info!("evaluate: {} rows -> {}", all_rows.len(), reports.display());
                Ok(())
            },
        );
        outcome
    }
}

/// Persist raw rows (for `sac report`) and render every report format.
pub fn write_rows_and_report(
    rows: &[MetricsRow],
    flagged: &[(usize, String)],
    dir: &Path,
) -> Result<(), AppError> {
    fs::create_dir_all(dir)
        .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let payload = serde_json::json!({
        "rows": rows,
        "failed_cases": flagged,
    });
    fs::write(
        dir.join("rows.json"),
        serde_json::to_string_pretty(&payload).unwrap(),
    )
    .map_err(|e| AppError::Runtime(format!("cannot write rows.json: {e}")))?;
    evaluation::emit_report(rows, dir)?;
    if !flagged.is_empty() {
        log::warn!("{} case(s) failed during search and were excluded", flagged.len());
    }
    Ok(())
}

/// Reload rows.json written by a previous evaluate/sweep.
pub fn read_rows(dir: &Path) -> Result<Vec<MetricsRow>, AppError> {
    let path = dir.join("rows.json");
    let raw = fs::read_to_string(&path).map_err(|e| {
        AppError::Validation(format!(
            "cannot read {} (run `sac evaluate` or `sac sweep` first): {e}",
            path.display()
        ))
    })?;
    let payload: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| AppError::Runtime(format!("malformed rows.json: {e}")))?;
    let rows = payload
        .get("rows")
        .cloned()
        .ok_or_else(|| AppError::Runtime("rows.json carries no rows".into()))?;
    serde_json::from_value(rows)
        .map_err(|e| AppError::Runtime(format!("malformed rows.json: {e}")))
}
