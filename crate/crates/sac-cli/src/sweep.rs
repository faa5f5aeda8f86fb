//! Grid sweeps over the ablation axes: chunk size, summary length, hybrid
//! weighting, strategy, and seed.
//!
//! Every cell runs the whole pipeline in memory against shared summary and
//! embedding caches, so identical texts are never summarized or embedded
//! twice across cells. Failures are recorded per cell and the sweep carries
//! on; the exit is nonzero if any cell failed.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sac_core::chunking::split_corpus;
use sac_core::corpus::{BenchmarkCase, Corpus};
use sac_core::evaluation::MetricsRow;
use sac_core::index::Index;

use crate::config::RunConfig;
use crate::pipeline::{write_rows_and_report, Pipeline};
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Chunk,
    Summary,
    WSemantic,
    Strategy,
    Seed,
}

impl Dimension {
    fn parse(name: &str) -> Result<Dimension, AppError> {
        match name {
            "chunk" | "chunk_size" => Ok(Dimension::Chunk),
            "summary" | "summary_length" => Ok(Dimension::Summary),
            "w" | "w_semantic" => Ok(Dimension::WSemantic),
            "strategy" => Ok(Dimension::Strategy),
            "seed" => Ok(Dimension::Seed),
            other => Err(AppError::Validation(format!(
                "unknown sweep dimension {other:?} (expected chunk, summary, w_semantic, strategy, or seed)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum DimValue {
    Number(u64),
    Weight(f64),
    Label(String),
}

impl std::fmt::Display for DimValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DimValue::Number(n) => write!(f, "{n}"),
            DimValue::Weight(w) => write!(f, "{w}"),
            DimValue::Label(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Axis {
    dimension: Dimension,
    name: String,
    values: Vec<DimValue>,
}

/// Parse `--grid chunk=200,500,800 summary=150,300 ...` tokens.
fn parse_grid(specs: &[String]) -> Result<Vec<Axis>, AppError> {
    let mut axes = Vec::new();
    for spec in specs {
        let (name, values) = spec.split_once('=').ok_or_else(|| {
            AppError::Validation(format!(
                "grid token {spec:?} must look like dim=v1,v2,..."
            ))
        })?;
        let dimension = Dimension::parse(name)?;
        let mut parsed = Vec::new();
        for value in values.split(',').filter(|v| !v.is_empty()) {
            let parsed_value = match dimension {
                Dimension::Chunk | Dimension::Summary | Dimension::Seed => DimValue::Number(
                    value.parse().map_err(|_| {
                        AppError::Validation(format!("{name}={value}: expected an integer"))
                    })?,
                ),
                Dimension::WSemantic => DimValue::Weight(value.parse().map_err(|_| {
                    AppError::Validation(format!("{name}={value}: expected a number in [0,1]"))
                })?),
                Dimension::Strategy => DimValue::Label(value.to_string()),
            };
            parsed.push(parsed_value);
        }
        if parsed.is_empty() {
            return Err(AppError::Validation(format!("{name}= lists no values")));
        }
        axes.push(Axis {
            dimension,
            name: name.to_string(),
            values: parsed,
        });
    }
    Ok(axes)
}

type CellResult = (String, Result<Vec<MetricsRow>, AppError>);

#[derive(Debug, Clone)]
struct Cell {
    assignments: Vec<(Dimension, String, DimValue)>,
}

impl Cell {
    fn label(&self) -> String {
        if self.assignments.is_empty() {
            return "base".to_string();
        }
        self.assignments
            .iter()
            .map(|(_, name, value)| format!("{name}={value}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Derive the cell's run configuration from the base one.
    fn apply(&self, base: &RunConfig) -> Result<RunConfig, AppError> {
        let mut config = base.clone();
        config.strategy = None; // let the label derive from the knobs below
        for (dimension, _, value) in &self.assignments {
            match (dimension, value) {
                (Dimension::Chunk, DimValue::Number(n)) => {
                    config.chunk.chunk_size = *n as usize;
                }
                (Dimension::Summary, DimValue::Number(n)) => {
                    config.summary.enabled = true;
                    config.summary.config.char_length = *n as usize;
                }
                (Dimension::WSemantic, DimValue::Weight(w)) => {
                    config.hybrid.enabled = true;
                    config.hybrid.w_semantic = *w;
                }
                (Dimension::Seed, DimValue::Number(n)) => {
                    config.seeds = vec![*n];
                }
                (Dimension::Strategy, DimValue::Label(label)) => match label.as_str() {
                    "baseline" => config.summary.enabled = false,
                    "sac-generic" => {
                        config.summary.enabled = true;
                        config.summary.config.strategy = sac_core::summary::SummaryStrategy::Generic;
                    }
                    "sac-expert" => {
                        config.summary.enabled = true;
                        config.summary.config.strategy = sac_core::summary::SummaryStrategy::Expert;
                    }
                    other => {
                        return Err(AppError::Validation(format!(
                            "unknown strategy {other:?} (expected baseline, sac-generic, or sac-expert)"
                        )))
                    }
                },
                _ => unreachable!("dimension/value kinds are paired at parse time"),
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn cartesian(axes: &[Axis]) -> Vec<Cell> {
    let mut cells = vec![Cell {
        assignments: Vec::new(),
    }];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for value in &axis.values {
                let mut assignments = cell.assignments.clone();
                assignments.push((axis.dimension, axis.name.clone(), value.clone()));
                next.push(Cell { assignments });
            }
        }
        cells = next;
    }
    cells
}

/// Run one cell end to end against shared caches; returns its metric rows.
fn run_cell(
    cell: &Cell,
    base: &RunConfig,
    workdir: &Path,
    corpus: &Corpus,
    cases: &[BenchmarkCase],
) -> Result<Vec<MetricsRow>, AppError> {
    let config = cell.apply(base)?;
    let pipeline = Pipeline::new(&config, Some(workdir.to_path_buf()), false);
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let summaries = pipeline.summaries(corpus, seed)?;
        let chunks = split_corpus(corpus, &config.chunk)?;
        let index = Index::build_with_options(
            chunks,
            summaries.as_ref(),
            pipeline.provider()?,
            config.bm25,
            pipeline.build_options(),
        )?;
        let outcome = pipeline.evaluate_seed(&index, cases, seed)?;
        if !outcome.failed_cases.is_empty() {
            return Err(AppError::Runtime(format!(
                "{} case(s) failed during search",
                outcome.failed_cases.len()
            )));
        }
        rows.extend(outcome.rows);
    }
    Ok(rows)
}

/// Run the whole grid and emit the combined report.
pub fn run_sweep(
    base: &RunConfig,
    grid_specs: &[String],
    workdir: Option<PathBuf>,
    jobs: usize,
) -> Result<(), AppError> {
    let axes = parse_grid(grid_specs)?;
    let cells = cartesian(&axes);
    let workdir = workdir.unwrap_or_else(|| base.workdir.clone());
    log::info!("sweep: {} cell(s), {} job(s)", cells.len(), jobs.max(1));

    let probe = Pipeline::new(base, Some(workdir.clone()), false);
    let corpus = probe.load_corpus()?;
    let cases = probe.load_cases(&corpus)?;

    let results: Vec<CellResult> = if jobs <= 1 {
        cells
            .iter()
            .map(|cell| {
                (
                    cell.label(),
                    run_cell(cell, base, &workdir, &corpus, &cases),
                )
            })
            .collect()
    } else {
        let next = Mutex::new(0usize);
        let slots: Mutex<Vec<Option<CellResult>>> =
            Mutex::new((0..cells.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(cells.len()) {
                scope.spawn(|| loop {
                    let i = {
                        let mut guard = next.lock().unwrap();
                        let i = *guard;
                        if i >= cells.len() {
                            break;
                        }
                        *guard += 1;
                        i
                    };
                    let out = run_cell(&cells[i], base, &workdir, &corpus, &cases);
                    slots.lock().unwrap()[i] = Some((cells[i].label(), out));
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|slot| slot.expect("all cells processed"))
            .collect()
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (label, result) in results {
        match result {
            Ok(cell_rows) => {
                log::info!("cell [{label}]: {} rows", cell_rows.len());
                rows.extend(cell_rows);
            }
            Err(e) => {
                log::error!("cell [{label}] failed: {e}");
                failures.push((label, e));
            }
        }
    }

    if !rows.is_empty() {
        write_rows_and_report(&rows, &[], &workdir.join("reports"))?;
        log::info!(
            "sweep: wrote {} rows to {}",
            rows.len(),
            workdir.join("reports").display()
        );
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(AppError::Runtime(format!(
            "{} of {} sweep cell(s) failed: {}",
            failures.len(),
            cells.len(),
            failures
                .iter()
                .map(|(label, e)| format!("[{label}] {e}"))
                .collect::<Vec<_>>()
                .join("; ")
        )))
    }
}
