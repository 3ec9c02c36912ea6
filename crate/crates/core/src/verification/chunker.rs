//! Sentence-level chunking of the refined prompt.
//!
//! Sentences end at a run of `.`, `!` or `?`, optionally followed by closing
//! quotes or brackets, when the next character is whitespace or the end of
//! text. A period always terminates, so abbreviations such as "Dr." split.
//! Scanning left to right, a chunk shorter than the word threshold absorbs
//! the following sentence; a short trailing chunk merges into its
//! predecessor.

use serde::{Deserialize, Serialize};

use super::VerificationError;
use crate::domain::{word_count, Chunk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkerConfig {
    pub min_words_per_chunk: usize,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        Self { min_words_per_chunk: 8 }
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}')
}

/// Byte spans of the sentences of `text`, trimmed, in order.
fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_terminator(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        if j == chars.len() || chars[j].1.is_whitespace() {
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            spans.push((start, end));
            start = end;
        }
        i = j;
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
        .into_iter()
        .filter_map(|(s, e)| trim_span(text, s, e))
        .collect()
}

fn trim_span(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    (!trimmed.is_empty()).then(|| (start + lead, start + lead + trimmed.len()))
}

/// Splits `text` into non-overlapping chunks that cover it in order.
pub fn chunk(text: &str, config: &ChunkerConfig) -> Result<Vec<Chunk>, VerificationError> {
    if text.trim().is_empty() {
        return Err(VerificationError::EmptyInput("prompt text"));
    }
    let threshold = config.min_words_per_chunk.max(1);
    let mut merged: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<(usize, usize)> = None;
    for (s, e) in sentence_spans(text) {
        let span = match pending.take() {
            Some((ps, _)) => (ps, e),
            None => (s, e),
        };
        if word_count(&text[span.0..span.1]) >= threshold {
            merged.push(span);
        } else {
            pending = Some(span);
        }
    }
    if let Some((ps, pe)) = pending {
        match merged.last_mut() {
            Some(last) => last.1 = pe,
            None => merged.push((ps, pe)),
        }
    }
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(index, (s, e))| Chunk {
            text: text[s..e].to_string(),
            index,
        })
        .collect())
}
