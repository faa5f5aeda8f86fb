//! `sac` — build, query, and evaluate summary-augmented retrieval pipelines.

mod config;
mod pipeline;
mod stages;
mod sweep;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sac_core::corpus::{BenchmarkFile, BenchmarkSnippet, BenchmarkTest, SpanUnit};
use sac_core::index::SearchMode;
use sac_core::synthetic::{self, SyntheticSpec};

use config::RunConfig;
use pipeline::Pipeline;

/// Errors split by exit code: 1 for bad inputs/config, 2 for runtime trouble.
#[derive(Debug)]
pub enum AppError {
    Validation(String),
    Runtime(String),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Validation(msg) | AppError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<sac_core::Error> for AppError {
    fn from(err: sac_core::Error) -> Self {
        if err.is_validation() {
            AppError::Validation(err.to_string())
        } else {
            AppError::Runtime(err.to_string())
        }
    }
}

impl AppError {
    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Validation(_) => ExitCode::from(1),
            AppError::Runtime(_) => ExitCode::from(2),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sac",
    version,
    about = "Summary-augmented chunking retrieval pipeline and evaluation harness"
)]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, default_value = "run.toml")]
    config: PathBuf,
    /// Override the configured work directory.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Rebuild stages even when their artifacts look up-to-date or stale.
    #[arg(long, global = true)]
    force: bool,
    /// Parallel sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Interpret benchmark spans as char or byte offsets (overrides config).
    #[arg(long, global = true, value_name = "char|byte")]
    span_unit: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus and benchmark file.
    Ingest,
    /// Generate per-document summaries for every configured seed.
    Summarize,
    /// Build and persist the retrieval index for every configured seed.
    Index,
    /// Search the persisted index and print the top results.
    Query {
        /// Query text.
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Override the search mode: dense, bm25, or hybrid.
        #[arg(long)]
        mode: Option<String>,
        /// Which seed's index to search (default: first configured seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full evaluation and write metrics reports.
    Evaluate,
    /// Run a grid of evaluations, e.g. --grid chunk=200,500,800 summary=150,300.
    Sweep {
        #[arg(long, num_args = 0.., value_name = "DIM=V1,V2,...")]
        grid: Vec<String>,
    },
    /// Generate a synthetic boilerplate corpus plus benchmark file.
    Synth {
        /// Generation spec (JSON); see SyntheticSpec.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (corpus/ and benchmark.json are created inside).
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render report files from a previous evaluation's rows.
    Report {
        /// Target directory (default: the workdir's reports directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(unit) = &cli.span_unit {
        config.span_unit = unit.parse()?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Synth { spec, out } => cmd_synth(spec, out),
        Command::Ingest => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            p.stage_ingest()?;
            Ok(())
        }
        Command::Summarize => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            if !config.summary.enabled {
                log::info!("summaries are disabled in this configuration; nothing to do");
                return Ok(());
            }
            let ingest = p.stage_ingest()?;
            let corpus = p.load_corpus()?;
            for &seed in &config.seeds {
                p.stage_summarize(&corpus, seed, ingest.ran())?;
            }
            Ok(())
        }
        Command::Index => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            let ingest = p.stage_ingest()?;
            let corpus = p.load_corpus()?;
            for &seed in &config.seeds {
                let summarized = p.stage_summarize(&corpus, seed, ingest.ran())?;
                p.stage_index(&corpus, seed, ingest.ran() || summarized.ran())?;
            }
            Ok(())
        }
        Command::Query { q, k, mode, seed } => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            cmd_query(&config, &p, q, *k, mode.as_deref(), *seed)
        }
        Command::Evaluate => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            let ingest = p.stage_ingest()?;
            let corpus = p.load_corpus()?;
            let cases = p.load_cases(&corpus)?;
            let mut refreshed = ingest.ran();
            for &seed in &config.seeds {
                let summarized = p.stage_summarize(&corpus, seed, ingest.ran())?;
                let indexed =
                    p.stage_index(&corpus, seed, ingest.ran() || summarized.ran())?;
                refreshed = refreshed || summarized.ran() || indexed.ran();
            }
            p.stage_evaluate(&cases, refreshed)?;
            Ok(())
        }
        Command::Sweep { grid } => {
            let config = load_config(&cli)?;
            sweep::run_sweep(&config, grid, cli.workdir.clone(), cli.jobs.max(1))
        }
        Command::Report { out } => {
            let config = load_config(&cli)?;
            let p = Pipeline::new(&config, cli.workdir.clone(), cli.force);
            let reports = p.reports_dir();
            let rows = pipeline::read_rows(&reports)?;
            let target = out.clone().unwrap_or(reports);
            sac_core::evaluation::emit_report(&rows, &target)?;
            log::info!("report: rendered {} rows into {}", rows.len(), target.display());
            Ok(())
        }
    }
}

fn cmd_query(
    config: &RunConfig,
    p: &Pipeline<'_>,
    query: &str,
    k: usize,
    mode: Option<&str>,
    seed: Option<u64>,
) -> Result<(), AppError> {
    let seed = seed.unwrap_or(config.seeds[0]);
    let index = p.load_index(seed)?;
    let mode = match mode {
        None => config.search_mode()?,
        Some("dense") => SearchMode::Dense,
        Some("bm25") => SearchMode::Bm25,
        Some("hybrid") => SearchMode::Hybrid {
            weights: sac_core::index::HybridWeights::new(config.hybrid.w_semantic)?,
            pool: config.hybrid.pool.max(k),
        },
        Some(other) => {
            return Err(AppError::Validation(format!(
                "unknown mode {other:?} (expected dense, bm25, or hybrid)"
            )))
        }
    };
    let result = index.search(mode, query, k)?;
    for (rank, retrieved) in index.resolve(&result).iter().enumerate() {
        let chunk = &index.chunk(result.hits[rank].row).chunk;
        let snippet: String = chunk.text.chars().take(80).collect();
        println!(
            "{:>2}. {} [{}, {})  score {:.4}",
            rank + 1,
            retrieved.doc_id,
            retrieved.span.start,
            retrieved.span.end,
            retrieved.score,
        );
        println!("    {:?}", snippet);
    }
    if result.hits.is_empty() {
        println!("no results");
    }
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path) -> Result<(), AppError> {
    let raw = fs::read_to_string(spec_path).map_err(|e| {
        AppError::Validation(format!("cannot read spec {}: {e}", spec_path.display()))
    })?;
    let spec: SyntheticSpec = serde_json::from_str(&raw)
        .map_err(|e| AppError::Validation(format!("spec {}: {e}", spec_path.display())))?;
    let (corpus, cases) = synthetic::generate(&spec)?;

    let corpus_dir = out.join("corpus");
    fs::create_dir_all(&corpus_dir)
        .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", corpus_dir.display())))?;
    for doc in corpus.documents() {
        let path = corpus_dir.join(doc.doc_id());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
        fs::write(&path, doc.text())
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }

    let file = BenchmarkFile {
        tests: cases
            .iter()
            .map(|case| BenchmarkTest {
                query: case.query.clone(),
                dataset: Some(case.dataset_tag.clone()),
                snippets: case
                    .ground_truth
                    .iter()
                    .map(|(doc_id, span)| BenchmarkSnippet {
                        file_path: doc_id.clone(),
                        span: [span.start, span.end],
                    })
                    .collect(),
            })
            .collect(),
    };
    let bench_path = out.join("benchmark.json");
    fs::write(&bench_path, serde_json::to_string_pretty(&file).unwrap())
        .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", bench_path.display())))?;

    // Round-trip validation: reload what was written.
    let reloaded = sac_core::corpus::Corpus::load(&corpus_dir)?;
    let reloaded_cases =
        sac_core::corpus::load_benchmark_with_unit(&bench_path, &reloaded, SpanUnit::Char)?;
    log::info!(
        "synth: wrote {} documents and {} cases to {}",
        reloaded.len(),
        reloaded_cases.len(),
        out.display()
    );
    Ok(())
}
