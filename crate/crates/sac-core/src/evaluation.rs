//! Retrieval-quality metrics and report emission.
//!
//! Three metrics per query: document-level retrieval mismatch (the fraction
//! of returned chunks whose document is not any ground-truth document),
//! character-level precision, and character-level recall over span unions.
//! Runs aggregate per dataset and top-k, plus a grand mean over the whole
//! k list.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{BenchmarkCase, Span};
use crate::error::{Error, Result};
use crate::index::{Index, RetrievedSpan, SearchMode};

/// Metrics for one (query, k) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub case_id: usize,
    pub k: usize,
    pub drm: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One aggregated report line. `k == None` is the grand mean over the k list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: String,
    pub strategy: String,
    pub chunk_size: usize,
    pub summary_length: Option<usize>,
    pub seed: u64,
    pub k: Option<usize>,
    pub drm: f64,
    pub precision: f64,
    pub recall: f64,
    pub cases: usize,
}

/// Run context stamped onto every emitted row.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub strategy: String,
    pub chunk_size: usize,
    pub summary_length: Option<usize>,
    pub seed: u64,
}

/// Everything produced by one evaluation run.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub rows: Vec<MetricsRow>,
    /// Cases whose search failed: `(case_id, error)`. Non-empty flags the run.
    pub failed_cases: Vec<(usize, String)>,
}

/// Fraction of returned chunks that do not originate from any ground-truth
/// document. An empty result counts as total mismatch (1.0).
pub fn drm(retrieved: &[RetrievedSpan], case: &BenchmarkCase) -> f64 {
    if retrieved.is_empty() {
        log::warn!("case {}: empty result, DRM defined as 1.0", case.case_id);
        return 1.0;
    }
    let gt_docs: HashSet<&str> = case
        .ground_truth
        .iter()
        .map(|(doc_id, _)| doc_id.as_str())
        .collect();
    let wrong = retrieved
        .iter()
        .filter(|r| !gt_docs.contains(r.doc_id.as_str()))
        .count();
    wrong as f64 / retrieved.len() as f64
}

/// Character-level precision and recall over per-document span unions.
///
/// Retrieved characters are deduplicated (union per document), so precision
/// is independent of redundant overlapping retrievals; intersections count
/// only within matching documents.
pub fn char_precision_recall(retrieved: &[RetrievedSpan], case: &BenchmarkCase) -> (f64, f64) {
    let mut retrieved_by_doc: BTreeMap<&str, Vec<Span>> = BTreeMap::new();
    for r in retrieved {
        retrieved_by_doc.entry(r.doc_id.as_str()).or_default().push(r.span);
    }
    let mut gt_by_doc: BTreeMap<&str, Vec<Span>> = BTreeMap::new();
    for (doc_id, span) in &case.ground_truth {
        gt_by_doc.entry(doc_id.as_str()).or_default().push(*span);
    }

    let mut retrieved_total = 0usize;
    let mut overlap_total = 0usize;
    for (doc_id, spans) in &mut retrieved_by_doc {
        let merged = merge_spans(spans);
        retrieved_total += merged.iter().map(Span::len).sum::<usize>();
        if let Some(gt_spans) = gt_by_doc.get_mut(doc_id) {
            let gt_merged = merge_spans(gt_spans);
            overlap_total += intersection_len(&merged, &gt_merged);
        }
    }
    let gt_total: usize = gt_by_doc
        .values_mut()
        .map(|spans| merge_spans(spans).iter().map(Span::len).sum::<usize>())
        .sum();

    let precision = if retrieved_total == 0 {
        0.0
    } else {
        overlap_total as f64 / retrieved_total as f64
    };
    let recall = if gt_total == 0 {
        0.0
    } else {
        overlap_total as f64 / gt_total as f64
    };
    (precision, recall)
}

/// Merge possibly-overlapping spans into a sorted disjoint cover.
fn merge_spans(spans: &mut [Span]) -> Vec<Span> {
    spans.sort_unstable_by_key(|s| (s.start, s.end));
    let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
    for &span in spans.iter() {
        match merged.last_mut() {
            Some(last) if span.start <= last.end => last.end = last.end.max(span.end),
            _ => merged.push(span),
        }
    }
    merged
}

/// Total intersection length of two sorted disjoint span lists.
fn intersection_len(a: &[Span], b: &[Span]) -> usize {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].start.max(b[j].start);
        let hi = a[i].end.min(b[j].end);
        if lo < hi {
            total += hi - lo;
        }
        if a[i].end <= b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Metrics for one case at every k, derived from a single search at the
/// largest k (valid because rankings are prefix-stable).
pub fn evaluate_case(
    index: &Index,
    mode: SearchMode,
    case: &BenchmarkCase,
    k_list: &[usize],
) -> Result<Vec<QueryMetrics>> {
    let max_k = *k_list.iter().max().expect("k_list is non-empty");
    let full = index.search(mode, &case.query, max_k)?;
    Ok(k_list
        .iter()
        .map(|&k| {
            let retrieved = index.resolve(&full.prefix(k));
            let (precision, recall) = char_precision_recall(&retrieved, case);
            QueryMetrics {
                case_id: case.case_id,
                k,
                drm: drm(&retrieved, case),
                precision,
                recall,
            }
        })
        .collect())
}

/// Evaluate every case at every k and aggregate arithmetic means per
/// `(dataset, k)`, plus the grand mean over the k list per dataset.
pub fn evaluate_run(
    index: &Index,
    mode: SearchMode,
    cases: &[BenchmarkCase],
    k_list: &[usize],
    meta: &RunMeta,
) -> Result<EvalOutcome> {
    if k_list.is_empty() {
        return Err(Error::Config("k_list must not be empty".into()));
    }
    let mut per_dataset: BTreeMap<&str, BTreeMap<usize, Vec<QueryMetrics>>> = BTreeMap::new();
    let mut failed_cases = Vec::new();
    for case in cases {
        match evaluate_case(index, mode, case, k_list) {
            Ok(metrics) => {
                let slot = per_dataset.entry(case.dataset_tag.as_str()).or_default();
                for m in metrics {
                    slot.entry(m.k).or_default().push(m);
                }
            }
            Err(e) => {
                log::warn!("case {} failed and is excluded: {e}", case.case_id);
                failed_cases.push((case.case_id, e.to_string()));
            }
        }
    }

    let mut rows = Vec::new();
    for (dataset, by_k) in &per_dataset {
        let mut k_means = Vec::new();
        for &k in k_list {
            let metrics = &by_k[&k];
            let n = metrics.len() as f64;
            let mean = |f: fn(&QueryMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / n;
            let row = MetricsRow {
                dataset: dataset.to_string(),
                strategy: meta.strategy.clone(),
                chunk_size: meta.chunk_size,
                summary_length: meta.summary_length,
                seed: meta.seed,
                k: Some(k),
                drm: mean(|m| m.drm),
                precision: mean(|m| m.precision),
                recall: mean(|m| m.recall),
                cases: metrics.len(),
            };
            k_means.push((row.drm, row.precision, row.recall, row.cases));
            rows.push(row);
        }
        // Grand mean over the k list (each k weighted equally).
        let n = k_means.len() as f64;
        rows.push(MetricsRow {
            dataset: dataset.to_string(),
            strategy: meta.strategy.clone(),
            chunk_size: meta.chunk_size,
            summary_length: meta.summary_length,
            seed: meta.seed,
            k: None,
            drm: k_means.iter().map(|m| m.0).sum::<f64>() / n,
            precision: k_means.iter().map(|m| m.1).sum::<f64>() / n,
            recall: k_means.iter().map(|m| m.2).sum::<f64>() / n,
            cases: k_means.first().map(|m| m.3).unwrap_or(0),
        });
    }
    Ok(EvalOutcome { rows, failed_cases })
}

fn fmt_k(k: Option<usize>) -> String {
    match k {
        Some(k) => k.to_string(),
        None => "mean".to_string(),
    }
}

/// Render rows as the stable CSV consumed by plotting scripts.
pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("dataset,strategy,chunk_size,summary_length,seed,k,drm,precision,recall,cases\n");
    for r in rows {
        let summary_length = r.summary_length.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{}",
            r.dataset,
            r.strategy,
            r.chunk_size,
            summary_length,
            r.seed,
            fmt_k(r.k),
            r.drm,
            r.precision,
            r.recall,
            r.cases
        )
        .unwrap();
    }
    out
}

/// Nested means: strategy -> dataset -> k -> metrics.
pub fn summary_json(rows: &[MetricsRow]) -> serde_json::Value {
    let mut root = serde_json::Map::new();
    for row in rows {
        let strategy = root
            .entry(row.strategy.clone())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        let dataset = strategy
            .as_object_mut()
            .unwrap()
            .entry(row.dataset.clone())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        dataset.as_object_mut().unwrap().insert(
            fmt_k(row.k),
            serde_json::json!({
                "drm": row.drm,
                "precision": row.precision,
                "recall": row.recall,
                "cases": row.cases,
            }),
        );
    }
    serde_json::Value::Object(root)
}

/// Mean of grand-mean rows grouped by a key extractor, for the ablation
/// tables. Only rows with `k == None` participate.
fn grouped_means<K: Ord + Clone>(
    rows: &[MetricsRow],
    key: impl Fn(&MetricsRow) -> Option<K>,
) -> BTreeMap<K, (f64, f64, f64)> {
    let mut acc: BTreeMap<K, (f64, f64, f64, usize)> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.k.is_none()) {
        if let Some(k) = key(row) {
            let slot = acc.entry(k).or_insert((0.0, 0.0, 0.0, 0));
            slot.0 += row.drm;
            slot.1 += row.precision;
            slot.2 += row.recall;
            slot.3 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (d, p, r, n))| {
            let n = n as f64;
            (k, (d / n, p / n, r / n))
        })
        .collect()
}

/// Chunk-size x summary-length ablation table (averaged over datasets,
/// seeds, and the whole k list). Percentages, three metric rows.
pub fn render_table1(rows: &[MetricsRow]) -> String {
    let cells = grouped_means(rows, |r| r.summary_length.map(|s| (r.chunk_size, s)));
    let columns: Vec<(usize, usize)> = cells.keys().copied().collect();
    let mut out = String::new();
    out.push_str("| Chunk |");
    for (chunk, _) in &columns {
        write!(out, " {chunk} |").unwrap();
    }
    out.push_str("\n| Sum. |");
    for (_, summary) in &columns {
        write!(out, " {summary} |").unwrap();
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');
    for (label, pick) in [
        ("Prec. (%)", 1usize),
        ("Rec. (%)", 2usize),
        ("DRM (%)", 0usize),
    ] {
        write!(out, "| {label} |").unwrap();
        for col in &columns {
            let m = cells[col];
            let v = [m.0, m.1, m.2][pick];
            write!(out, " {:.2} |", v * 100.0).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Hybrid-weighting ablation table. Columns are parsed from strategy labels
/// of the form `hybrid-w<percent>`, highest weighting first.
pub fn render_table2(rows: &[MetricsRow]) -> String {
    let cells = grouped_means(rows, |r| {
        parse_hybrid_weight(&r.strategy).map(std::cmp::Reverse)
    });
    let columns: Vec<u32> = cells.keys().map(|r| r.0).collect();
    let mut out = String::new();
    out.push_str("| w_semantic |");
    for w in &columns {
        write!(out, " {w}% |").unwrap();
    }
    out.push_str("\n| w_keyword |");
    for w in &columns {
        write!(out, " {}% |", 100 - w).unwrap();
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');
    for (label, pick) in [
        ("Prec. (%)", 1usize),
        ("Rec. (%)", 2usize),
        ("DRM (%)", 0usize),
    ] {
        write!(out, "| {label} |").unwrap();
        for w in &columns {
            let m = cells[&std::cmp::Reverse(*w)];
            let v = [m.0, m.1, m.2][pick];
            write!(out, " {:.2} |", v * 100.0).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Percent weighting from a `hybrid-w<percent>` strategy label.
pub fn parse_hybrid_weight(strategy: &str) -> Option<u32> {
    strategy
        .strip_prefix("hybrid-w")
        .and_then(|rest| rest.parse().ok())
}

/// Write `metrics.csv`, `summary.json`, `table1.md`, and `table2.md`.
pub fn emit_report(rows: &[MetricsRow], dir: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("cannot emit a report from zero rows".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let write = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| Error::Io { path, source })
    };
    write("metrics.csv", rows_to_csv(rows))?;
    write(
        "summary.json",
        serde_json::to_string_pretty(&summary_json(rows)).unwrap(),
    )?;
    write("table1.md", render_table1(rows))?;
    write("table2.md", render_table2(rows))?;
    Ok(())
}

/// The k list used throughout the experiments.
pub fn default_k_list() -> Vec<usize> {
    vec![1, 2, 4, 8, 15, 32, 64]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(gt: Vec<(&str, (usize, usize))>) -> BenchmarkCase {
        BenchmarkCase {
            case_id: 0,
            query: "q".into(),
            ground_truth: gt
                .into_iter()
                .map(|(d, (s, e))| (d.to_string(), Span::new(s, e)))
                .collect(),
            dataset_tag: "test".into(),
        }
    }

    fn hits(spans: Vec<(&str, (usize, usize))>) -> Vec<RetrievedSpan> {
        spans
            .into_iter()
            .map(|(d, (s, e))| RetrievedSpan {
                doc_id: d.to_string(),
                span: Span::new(s, e),
                score: 0.0,
            })
            .collect()
    }

    #[test]
    fn drm_counts_wrong_document_fraction() {
        let c = case(vec![("gt.txt", (0, 10))]);
        let all_right = hits(vec![("gt.txt", (0, 5)); 4]);
        assert_eq!(drm(&all_right, &c), 0.0);
        let half = hits(vec![
            ("gt.txt", (0, 5)),
            ("other.txt", (0, 5)),
            ("gt.txt", (5, 9)),
            ("another.txt", (0, 5)),
        ]);
        assert_eq!(drm(&half, &c), 0.5);
        let wrong = hits(vec![("other.txt", (0, 5))]);
        assert_eq!(drm(&wrong, &c), 1.0);
    }

    #[test]
    fn drm_empty_result_is_total_mismatch() {
        let c = case(vec![("gt.txt", (0, 10))]);
        assert_eq!(drm(&[], &c), 1.0);
    }

    #[test]
    fn drm_multi_document_ground_truth_accepts_any() {
        let c = case(vec![("a.txt", (0, 10)), ("b.txt", (0, 10))]);
        let r = hits(vec![("a.txt", (0, 5)), ("b.txt", (0, 5))]);
        assert_eq!(drm(&r, &c), 0.0);
    }

    #[test]
    fn half_overlap_gives_half_precision_and_recall() {
        let c = case(vec![("d.txt", (50, 150))]);
        let r = hits(vec![("d.txt", (0, 100))]);
        let (p, rec) = char_precision_recall(&r, &c);
        assert_eq!(p, 0.5);
        assert_eq!(rec, 0.5);
    }

    #[test]
    fn wrong_document_retrievals_score_zero() {
        let c = case(vec![("d.txt", (50, 150))]);
        let r = hits(vec![("x.txt", (0, 100)), ("y.txt", (50, 150))]);
        let (p, rec) = char_precision_recall(&r, &c);
        assert_eq!((p, rec), (0.0, 0.0));
    }

    #[test]
    fn overlapping_retrieved_spans_are_deduplicated() {
        // [0,60) and [40,100) union to [0,100); overlap with [50,150) is 50.
        let c = case(vec![("d.txt", (50, 150))]);
        let r = hits(vec![("d.txt", (0, 60)), ("d.txt", (40, 100))]);
        let (p, rec) = char_precision_recall(&r, &c);
        assert_eq!(p, 0.5);
        assert_eq!(rec, 0.5);
    }

    #[test]
    fn empty_result_scores_zero_precision_recall() {
        let c = case(vec![("d.txt", (0, 10))]);
        assert_eq!(char_precision_recall(&[], &c), (0.0, 0.0));
    }

    #[test]
    fn perfect_retrieval_fixpoint() {
        let c = case(vec![("d.txt", (10, 30)), ("d.txt", (40, 50))]);
        let r = hits(vec![("d.txt", (10, 30)), ("d.txt", (40, 50))]);
        let (p, rec) = char_precision_recall(&r, &c);
        assert_eq!((p, rec), (1.0, 1.0));
        assert_eq!(drm(&r, &c), 0.0);
    }

    #[test]
    fn merge_spans_handles_adjacent_and_nested() {
        let mut spans = vec![
            Span::new(5, 10),
            Span::new(0, 3),
            Span::new(9, 12),
            Span::new(6, 8),
        ];
        assert_eq!(
            merge_spans(&mut spans),
            vec![Span::new(0, 3), Span::new(5, 12)]
        );
    }

    /// Character-set oracle used to cross-check the interval arithmetic.
    fn oracle_precision_recall(retrieved: &[RetrievedSpan], case: &BenchmarkCase) -> (f64, f64) {
        let mut r: HashSet<(String, usize)> = HashSet::new();
        for hit in retrieved {
            for i in hit.span.start..hit.span.end {
                r.insert((hit.doc_id.clone(), i));
            }
        }
        let mut g: HashSet<(String, usize)> = HashSet::new();
        for (doc, span) in &case.ground_truth {
            for i in span.start..span.end {
                g.insert((doc.clone(), i));
            }
        }
        let overlap = r.intersection(&g).count();
        let p = if r.is_empty() { 0.0 } else { overlap as f64 / r.len() as f64 };
        let rec = if g.is_empty() { 0.0 } else { overlap as f64 / g.len() as f64 };
        (p, rec)
    }

    #[test]
    fn interval_arithmetic_matches_character_set_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let docs = ["a", "b", "c"];
            let mut retrieved = Vec::new();
            for _ in 0..rng.random_range(0..8) {
                let d = docs[rng.random_range(0..docs.len())];
                let start = rng.random_range(0..1900);
                let end = start + rng.random_range(1..100);
                retrieved.push(RetrievedSpan {
                    doc_id: d.to_string(),
                    span: Span::new(start, end),
                    score: 0.0,
                });
            }
            let mut gt = Vec::new();
            for _ in 0..rng.random_range(1..8) {
                let d = docs[rng.random_range(0..docs.len())];
                let start = rng.random_range(0..1900);
                let end = start + rng.random_range(1..100);
                gt.push((d.to_string(), Span::new(start, end)));
            }
            let c = BenchmarkCase {
                case_id: 0,
                query: String::new(),
                ground_truth: gt,
                dataset_tag: "t".into(),
            };
            assert_eq!(
                char_precision_recall(&retrieved, &c),
                oracle_precision_recall(&retrieved, &c)
            );
        }
    }

    fn row(dataset: &str, strategy: &str, chunk: usize, summary: Option<usize>, k: Option<usize>) -> MetricsRow {
        MetricsRow {
            dataset: dataset.into(),
            strategy: strategy.into(),
            chunk_size: chunk,
            summary_length: summary,
            seed: 0,
            k,
            drm: 0.25,
            precision: 0.5,
            recall: 0.75,
            cases: 10,
        }
    }

    #[test]
    fn csv_has_header_and_mean_rows() {
        let rows = vec![
            row("d", "s", 500, Some(150), Some(1)),
            row("d", "s", 500, Some(150), None),
        ];
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("dataset,strategy,chunk_size"));
        assert!(lines[1].contains(",1,"));
        assert!(lines[2].contains(",mean,"));
    }

    #[test]
    fn table1_renders_three_metric_rows_by_grid_columns() {
        let mut rows = Vec::new();
        for chunk in [200, 500, 800] {
            for summary in [150, 300] {
                rows.push(row("d", "sac-generic", chunk, Some(summary), None));
            }
        }
        let table = render_table1(&rows);
        let lines: Vec<&str> = table.lines().collect();
        // Header (chunk), header (summary), separator, three metric rows.
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0].matches('|').count(), 8, "6 data columns");
        assert!(lines[3].starts_with("| Prec. (%)"));
        assert!(lines[4].starts_with("| Rec. (%)"));
        assert!(lines[5].starts_with("| DRM (%)"));
    }

    #[test]
    fn table2_renders_four_weight_columns_descending() {
        let mut rows = Vec::new();
        for w in [100, 75, 50, 25] {
            rows.push(row("d", &format!("hybrid-w{w}"), 500, Some(150), None));
        }
        let table = render_table2(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].contains("100% | 75% | 50% | 25%"));
        assert!(lines[1].contains("0% | 25% | 50% | 75%"));
        assert!(lines[3].starts_with("| Prec. (%)"));
    }

    #[test]
    fn prefix_derived_metrics_match_independent_searches() {
        use crate::chunking::{split_corpus, ChunkConfig};
        use crate::embedding::HashEmbedder;
        use crate::index::Index;
        use crate::synthetic::{generate, SyntheticSpec};

        let spec = SyntheticSpec {
            n_docs: 6,
            slot_entropy: 8,
            seed: 4,
            ..SyntheticSpec::default()
        };
        let (corpus, cases) = generate(&spec).unwrap();
        let chunks = split_corpus(&corpus, &ChunkConfig::new(200, 0)).unwrap();
        let index = Index::build(
            chunks,
            None,
            Box::new(HashEmbedder::default()),
            crate::index::Bm25Params::default(),
        )
        .unwrap();

        let k_list = [1, 2, 4, 8];
        for case in &cases {
            let derived = evaluate_case(&index, SearchMode::Dense, case, &k_list).unwrap();
            for metrics in derived {
                let fresh = index
                    .search(SearchMode::Dense, &case.query, metrics.k)
                    .unwrap();
                let retrieved = index.resolve(&fresh);
                let (precision, recall) = char_precision_recall(&retrieved, case);
                assert_eq!(metrics.drm, drm(&retrieved, case));
                assert_eq!(metrics.precision, precision);
                assert_eq!(metrics.recall, recall);
                assert!(metrics.drm >= 0.0 && metrics.drm <= 1.0);
                assert!(metrics.precision >= 0.0 && metrics.precision <= 1.0);
                assert!(metrics.recall >= 0.0 && metrics.recall <= 1.0);
            }
        }
    }

    #[test]
    fn chunks_inside_ground_truth_give_unit_precision_with_growing_recall() {
        use crate::chunking::Chunk;
        use crate::embedding::HashEmbedder;
        use crate::index::Index;

        // One 60-char document split into two 30-char chunks; the ground
        // truth covers the whole document.
        let text = "alpha bravo charlie delta echo".repeat(2);
        let chunks = vec![
            Chunk {
                doc_id: "d.txt".into(),
                span: Span::new(0, 30),
                text: text.chars().take(30).collect(),
            },
            Chunk {
                doc_id: "d.txt".into(),
                span: Span::new(30, 60),
                text: text.chars().skip(30).take(30).collect(),
            },
        ];
        let index = Index::build(
            chunks,
            None,
            Box::new(HashEmbedder::default()),
            crate::index::Bm25Params::default(),
        )
        .unwrap();
        let case = BenchmarkCase {
            case_id: 0,
            query: text.clone(),
            ground_truth: vec![("d.txt".into(), Span::new(0, 60))],
            dataset_tag: "t".into(),
        };
        let metrics = evaluate_case(&index, SearchMode::Dense, &case, &[1, 2]).unwrap();
        assert_eq!(metrics[0].precision, 1.0);
        assert_eq!(metrics[1].precision, 1.0);
        assert_eq!(metrics[0].recall, 0.5);
        assert_eq!(metrics[1].recall, 1.0);
        assert_eq!(metrics[1].drm, 0.0);
    }

    #[test]
    fn emit_report_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row("d", "s", 500, Some(150), None)];
        emit_report(&rows, dir.path().join("reports")).unwrap();
        for name in ["metrics.csv", "summary.json", "table1.md", "table2.md"] {
            assert!(dir.path().join("reports").join(name).exists(), "{name}");
        }
        assert!(emit_report(&[], dir.path()).is_err());
    }
}
