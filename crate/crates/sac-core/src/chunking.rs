//! Recursive character splitting with faithful source spans.
//!
//! Separators are tried in order; text is split into pieces with the
//! separator retained at the end of the preceding piece, small pieces are
//! merged greedily up to the size budget, and any piece that alone exceeds
//! the budget is split again with the next separator. The terminal `""`
//! separator cuts fixed-size character windows, so every produced chunk is an
//! exact substring of the document and no chunk exceeds `chunk_size`.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Span};
use crate::error::{Error, Result};

/// Splitting parameters. Sizes count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub separators: Vec<String>,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            chunk_size: 500,
            overlap: 0,
            separators: default_separators(),
        }
    }
}

pub fn default_separators() -> Vec<String> {
    vec!["\n\n".into(), "\n".into(), " ".into(), String::new()]
}

impl ChunkConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Self {
        ChunkConfig {
            chunk_size,
            overlap,
            separators: default_separators(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_size < 1 {
            return Err(Error::Config("chunk_size must be >= 1".into()));
        }
        if self.overlap >= self.chunk_size {
            return Err(Error::Config(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            )));
        }
        match self.separators.last() {
            Some(last) if last.is_empty() => Ok(()),
            _ => Err(Error::Config(
                "separator list must end with \"\" (hard character split)".into(),
            )),
        }
    }
}

/// A retrieval unit: an exact substring of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub span: Span,
    pub text: String,
}

/// Split one document into chunks of at most `chunk_size` characters.
///
/// With `overlap == 0` the chunk spans tile `[0, document.len())` exactly and
/// concatenating the chunk texts reproduces the document text.
pub fn split(document: &Document, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    config.validate()?;
    if document.is_empty() {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = document.text().chars().collect();
    let separators: Vec<Vec<char>> = config
        .separators
        .iter()
        .map(|s| s.chars().collect())
        .collect();
    let mut spans = Vec::new();
    split_range(&chars, 0, chars.len(), &separators, 0, config, &mut spans);
    Ok(spans
        .into_iter()
        .map(|(start, end)| {
            let span = Span::new(start, end);
            Chunk {
                doc_id: document.doc_id().to_string(),
                span,
                text: document.slice(span).to_string(),
            }
        })
        .collect())
}

/// Split every document of a corpus, in sorted document order.
pub fn split_corpus(corpus: &crate::corpus::Corpus, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    for doc in corpus.documents() {
        chunks.extend(split(doc, config)?);
    }
    Ok(chunks)
}

fn split_range(
    chars: &[char],
    start: usize,
    end: usize,
    separators: &[Vec<char>],
    level: usize,
    config: &ChunkConfig,
    out: &mut Vec<(usize, usize)>,
) {
    if end <= start {
        return;
    }
    if end - start <= config.chunk_size {
        out.push((start, end));
        return;
    }
    if level >= separators.len() || separators[level].is_empty() {
        hard_windows(start, end, config, out);
        return;
    }
    let sep = &separators[level];
    let pieces = split_pieces(chars, start, end, sep);
    if pieces.len() <= 1 {
        split_range(chars, start, end, separators, level + 1, config, out);
        return;
    }

    // Greedy merge: `cur` is where the chunk under construction begins.
    let mut cur = start;
    for &(piece_start, piece_end) in &pieces {
        if piece_end - cur <= config.chunk_size {
            continue; // piece joins the current chunk
        }
        if cur < piece_start {
            out.push((cur, piece_start));
            if piece_end - piece_start <= config.chunk_size {
                // Start the next chunk backed up by `overlap`, clamped so the
                // piece still fits and the boundary moves forward.
                cur = piece_start
                    .saturating_sub(config.overlap)
                    .max(piece_end.saturating_sub(config.chunk_size))
                    .max(out.last().map(|&(s, _)| s + 1).unwrap_or(0));
                continue;
            }
        }
        // cur == piece_start and the piece alone exceeds the budget.
        split_range(chars, piece_start, piece_end, separators, level + 1, config, out);
        cur = piece_end;
    }
    if cur < end {
        out.push((cur, end));
    }
}

/// Fixed-size windows stepping by `chunk_size - overlap`.
fn hard_windows(start: usize, end: usize, config: &ChunkConfig, out: &mut Vec<(usize, usize)>) {
    let step = config.chunk_size - config.overlap;
    let mut i = start;
    loop {
        let window_end = (i + config.chunk_size).min(end);
        out.push((i, window_end));
        if window_end == end {
            break;
        }
        i += step;
    }
}

/// Split `[start, end)` at each occurrence of `sep`, retaining the separator
/// at the end of the preceding piece. Pieces are never empty and tile the
/// range exactly.
fn split_pieces(
    chars: &[char],
    start: usize,
    end: usize,
    sep: &[char],
) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut piece_start = start;
    let mut i = start;
    while i + sep.len() <= end {
        if chars[i..i + sep.len()] == *sep {
            let piece_end = i + sep.len();
            pieces.push((piece_start, piece_end));
            piece_start = piece_end;
            i = piece_end;
        } else {
            i += 1;
        }
    }
    if piece_start < end {
        pieces.push((piece_start, end));
    }
    pieces
}
