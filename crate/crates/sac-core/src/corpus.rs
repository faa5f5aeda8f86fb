//! Document corpora, character spans, and benchmark loading.
//!
//! All offsets in the system count Unicode scalar values of the decoded text,
//! never bytes. [`Document`] keeps a char-to-byte table so that slicing at
//! character offsets stays cheap everywhere downstream (chunking, metrics).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open character range `[start, end)` within one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    /// Number of characters covered.
    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A corpus document with stable character-offset addressing.
#[derive(Debug, Clone)]
pub struct Document {
    doc_id: String,
    text: String,
    /// Byte offset of character `i`; one extra entry holds `text.len()`.
    char_starts: Vec<usize>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut char_starts: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        char_starts.push(text.len());
        Document {
            doc_id: doc_id.into(),
            text,
            char_starts,
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Document length in characters (Unicode scalar values).
    pub fn len(&self) -> usize {
        self.char_starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact substring at a character span. Panics if the span is out of
    /// bounds; validate spans before slicing.
    pub fn slice(&self, span: Span) -> &str {
        &self.text[self.char_starts[span.start]..self.char_starts[span.end]]
    }

    /// True when `span` lies inside this document.
    pub fn contains(&self, span: Span) -> bool {
        span.start < span.end && span.end <= self.len()
    }

    /// Map a byte offset into the UTF-8 text to its character offset.
    /// Returns `None` when the offset is past the end or not a char boundary.
    pub fn byte_to_char(&self, byte: usize) -> Option<usize> {
        self.char_starts.binary_search(&byte).ok()
    }
}

/// One benchmark query with its ground-truth spans.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    /// Position of the case in its benchmark file.
    pub case_id: usize,
    pub query: String,
    /// `(doc_id, span)` pairs; non-empty and validated against the corpus.
    pub ground_truth: Vec<(String, Span)>,
    pub dataset_tag: String,
}

/// An immutable set of documents with deterministic (sorted) iteration.
#[derive(Debug, Clone)]
pub struct Corpus {
    root: PathBuf,
    documents: BTreeMap<String, Document>,
}

impl Corpus {
    /// Load every regular file under `root` as one UTF-8 document.
    ///
    /// `doc_id` is the path relative to `root`, always with forward slashes.
    pub fn load(root: impl AsRef<Path>) -> Result<Corpus> {
        let root = root.as_ref();
        let mut files = Vec::new();
        collect_files(root, &mut files)?;
        files.sort();

        let mut documents = BTreeMap::new();
        for path in files {
            let bytes = fs::read(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let text = String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
                path: path.clone(),
                offset: e.utf8_error().valid_up_to(),
            })?;
            let rel = path
                .strip_prefix(root)
                .expect("walked paths start with root");
            let doc_id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            documents.insert(doc_id.clone(), Document::new(doc_id, text));
        }
        Ok(Corpus {
            root: root.to_path_buf(),
            documents,
        })
    }

    /// Build a corpus from in-memory documents (synthetic generation, tests).
    pub fn from_documents(root: impl Into<PathBuf>, docs: Vec<Document>) -> Corpus {
        let documents = docs
            .into_iter()
            .map(|d| (d.doc_id.clone(), d))
            .collect::<BTreeMap<_, _>>();
        Corpus {
            root: root.into(),
            documents,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    /// Documents in sorted `doc_id` order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Cheap content fingerprint used for stage staleness checks.
    pub fn fingerprint(&self) -> String {
        let mut h = crate::embedding::Fnv64::new();
        for doc in self.documents() {
            h.update(doc.doc_id().as_bytes());
            h.update(&(doc.len() as u64).to_le_bytes());
        }
        format!("{:016x}-{}", h.finish(), self.len())
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let name = entry.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        let ty = entry.file_type().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        if ty.is_dir() {
            collect_files(&path, out)?;
        } else if ty.is_file() {
            out.push(path);
        }
    }
    Ok(())
}

/// Unit in which a benchmark file addresses its spans.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanUnit {
    #[default]
    Char,
    Byte,
}

impl std::str::FromStr for SpanUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(SpanUnit::Char),
            "byte" => Ok(SpanUnit::Byte),
            other => Err(Error::Config(format!(
                "unknown span unit {other:?} (expected \"char\" or \"byte\")"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkFile {
    pub tests: Vec<BenchmarkTest>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkTest {
    pub query: String,
    #[serde(default, alias = "dataset_tag", skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub snippets: Vec<BenchmarkSnippet>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkSnippet {
    #[serde(alias = "path", alias = "file")]
    pub file_path: String,
    /// Half-open `[start, end)` pair.
    pub span: [usize; 2],
}

/// Load and validate a benchmark file with character-indexed spans.
pub fn load_benchmark(file: impl AsRef<Path>, corpus: &Corpus) -> Result<Vec<BenchmarkCase>> {
    load_benchmark_with_unit(file, corpus, SpanUnit::Char)
}

/// Load a benchmark file whose spans use the given unit. Byte spans are
/// converted to character offsets against the loaded documents.
pub fn load_benchmark_with_unit(
    file: impl AsRef<Path>,
    corpus: &Corpus,
    unit: SpanUnit,
) -> Result<Vec<BenchmarkCase>> {
    let path = file.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed: BenchmarkFile = serde_json::from_str(&raw)
        .map_err(|e| Error::Benchmark(format!("{}: malformed JSON: {e}", path.display())))?;
    let default_tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "benchmark".to_string());
    cases_from_file(parsed, corpus, unit, &default_tag)
}

/// Validate parsed benchmark tests against a corpus.
pub fn cases_from_file(
    file: BenchmarkFile,
    corpus: &Corpus,
    unit: SpanUnit,
    default_tag: &str,
) -> Result<Vec<BenchmarkCase>> {
    let mut cases = Vec::with_capacity(file.tests.len());
    for (case_id, test) in file.tests.into_iter().enumerate() {
        if test.snippets.is_empty() {
            return Err(Error::Benchmark(format!(
                "case {case_id}: ground truth is empty"
            )));
        }
        let mut ground_truth = Vec::with_capacity(test.snippets.len());
        for snippet in test.snippets {
            let doc = corpus
                .get(&snippet.file_path)
                .ok_or_else(|| Error::MissingDocument {
                    case: case_id,
                    doc_id: snippet.file_path.clone(),
                })?;
            let [raw_start, raw_end] = snippet.span;
            let span = match unit {
                SpanUnit::Char => Span::new(raw_start, raw_end),
                SpanUnit::Byte => {
                    let to_char = |b: usize| {
                        doc.byte_to_char(b).ok_or_else(|| Error::Benchmark(format!(
                            "case {case_id}: byte offset {b} in {:?} is not a character boundary",
                            snippet.file_path
                        )))
                    };
                    Span::new(to_char(raw_start)?, to_char(raw_end)?)
                }
            };
            if span.is_empty() || span.end > doc.len() {
                return Err(Error::SpanOutOfBounds {
                    case: case_id,
                    doc_id: snippet.file_path.clone(),
                    start: span.start,
                    end: span.end,
                    len: doc.len(),
                });
            }
            ground_truth.push((snippet.file_path, span));
        }
        cases.push(BenchmarkCase {
            case_id,
            query: test.query,
            ground_truth,
            dataset_tag: test.dataset.unwrap_or_else(|| default_tag.to_string()),
        });
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, rel: &str, contents: &str) {
        let path = dir.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        let mut f = fs::File::create(path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
    }

    #[test]
    fn empty_directory_loads_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = Corpus::load(dir.path()).unwrap();
        assert_eq!(corpus.len(), 0);
    }

    #[test]
    fn loads_nested_files_with_forward_slash_ids() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.txt", "hello");
        write_file(dir.path(), "sub/b.txt", "world");
        let corpus = Corpus::load(dir.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        let ids: Vec<&str> = corpus.documents().map(|d| d.doc_id()).collect();
        assert_eq!(ids, vec!["a.txt", "sub/b.txt"]);
        assert_eq!(corpus.get("a.txt").unwrap().len(), 5);
        assert_eq!(corpus.get("sub/b.txt").unwrap().len(), 5);
    }

    #[test]
    fn multibyte_character_counts_once() {
        // "€" is 3 bytes in UTF-8 but one scalar value.
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "euro.txt", "€ab");
        let corpus = Corpus::load(dir.path()).unwrap();
        let doc = corpus.get("euro.txt").unwrap();
        assert_eq!(doc.len(), 3);
        assert_eq!(doc.slice(Span::new(0, 1)), "€");
        assert_eq!(doc.slice(Span::new(1, 3)), "ab");
    }

    #[test]
    fn invalid_utf8_reports_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, [b'o', b'k', 0xFF, b'x']).unwrap();
        let err = Corpus::load(dir.path()).unwrap_err();
        match err {
            Error::InvalidUtf8 { offset, .. } => assert_eq!(offset, 2),
            other => panic!("expected InvalidUtf8, got {other:?}"),
        }
    }

    #[test]
    fn corpus_load_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "z.txt", "zzz");
        write_file(dir.path(), "a/b.txt", "bbb");
        write_file(dir.path(), "a/a.txt", "aaa");
        let c1 = Corpus::load(dir.path()).unwrap();
        let c2 = Corpus::load(dir.path()).unwrap();
        let ids1: Vec<&str> = c1.documents().map(|d| d.doc_id()).collect();
        let ids2: Vec<&str> = c2.documents().map(|d| d.doc_id()).collect();
        assert_eq!(ids1, ids2);
        assert_eq!(c1.fingerprint(), c2.fingerprint());
    }

    fn hundred_char_corpus() -> Corpus {
        let doc = Document::new("d.txt", "x".repeat(100));
        Corpus::from_documents("mem", vec![doc])
    }

    #[test]
    fn benchmark_case_in_bounds_loads() {
        let corpus = hundred_char_corpus();
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "bench.json",
            r#"{"tests":[{"query":"q","snippets":[{"file_path":"d.txt","span":[0,10]}]}]}"#,
        );
        let cases = load_benchmark(dir.path().join("bench.json"), &corpus).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].ground_truth[0].1, Span::new(0, 10));
        assert_eq!(cases[0].dataset_tag, "bench");
    }

    #[test]
    fn benchmark_span_out_of_bounds_names_case() {
        let corpus = hundred_char_corpus();
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "bench.json",
            r#"{"tests":[{"query":"q","snippets":[{"file_path":"d.txt","span":[90,120]}]}]}"#,
        );
        let err = load_benchmark(dir.path().join("bench.json"), &corpus).unwrap_err();
        match err {
            Error::SpanOutOfBounds { case, start, end, len, .. } => {
                assert_eq!((case, start, end, len), (0, 90, 120, 100));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_case_list_is_ok() {
        let corpus = hundred_char_corpus();
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "bench.json", r#"{"tests":[]}"#);
        let cases = load_benchmark(dir.path().join("bench.json"), &corpus).unwrap();
        assert!(cases.is_empty());
    }

    #[test]
    fn unknown_fields_are_ignored_and_aliases_accepted() {
        let corpus = hundred_char_corpus();
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "bench.json",
            r#"{"tests":[{"query":"q","dataset":"cuad","extra":1,
                "snippets":[{"path":"d.txt","span":[5,9],"note":"x"}]}]}"#,
        );
        let cases = load_benchmark(dir.path().join("bench.json"), &corpus).unwrap();
        assert_eq!(cases[0].dataset_tag, "cuad");
        assert_eq!(cases[0].ground_truth[0].1, Span::new(5, 9));
    }

    #[test]
    fn byte_unit_spans_are_converted() {
        // Document "€ab": byte span [3, 5) covers "ab" = char span [1, 3).
        let doc = Document::new("e.txt", "€ab");
        let corpus = Corpus::from_documents("mem", vec![doc]);
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "bench.json",
            r#"{"tests":[{"query":"q","snippets":[{"file_path":"e.txt","span":[3,5]}]}]}"#,
        );
        let cases =
            load_benchmark_with_unit(dir.path().join("bench.json"), &corpus, SpanUnit::Byte)
                .unwrap();
        assert_eq!(cases[0].ground_truth[0].1, Span::new(1, 3));
    }

    #[test]
    fn slice_round_trip_has_span_length() {
        let doc = Document::new("d", "αβγ hello\nworld ξ");
        for start in 0..doc.len() {
            for end in (start + 1)..=doc.len() {
                let span = Span::new(start, end);
                assert_eq!(doc.slice(span).chars().count(), span.len());
            }
        }
    }

    proptest::proptest! {
        /// Fuzzed spans: a case survives loading iff its span satisfies
        /// 0 <= start < end <= document length.
        #[test]
        fn fuzzed_spans_load_iff_valid(start in 0usize..150, end in 0usize..150) {
            let corpus = hundred_char_corpus();
            let file = BenchmarkFile {
                tests: vec![BenchmarkTest {
                    query: "q".into(),
                    dataset: None,
                    snippets: vec![BenchmarkSnippet {
                        file_path: "d.txt".into(),
                        span: [start, end],
                    }],
                }],
            };
            let result = cases_from_file(file, &corpus, SpanUnit::Char, "t");
            let valid = start < end && end <= 100;
            proptest::prop_assert_eq!(result.is_ok(), valid);
            if let Ok(cases) = result {
                for case in &cases {
                    for (_, span) in &case.ground_truth {
                        proptest::prop_assert!(span.start < span.end && span.end <= 100);
                    }
                }
            }
        }
    }
}
