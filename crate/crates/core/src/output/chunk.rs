//! Sentence segmentation of responses into navigable chunks.

use serde::{Deserialize, Serialize};

use super::{HighlightCommand, Persistence};
use crate::render::{ElementId, TactileFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseChunk {
    pub index: usize,
    /// Exact slice of the response, trailing whitespace included.
    pub text: String,
    pub highlight: Option<HighlightCommand>,
    pub braille_label: Option<String>,
    pub referenced_elements: Vec<ElementId>,
}

const ABBREVIATIONS: [&str; 12] = [
    "e.g", "i.e", "vs", "etc", "approx", "mr", "mrs", "dr", "st", "no", "fig", "cf",
];

fn is_quarter_token(tok: &str) -> bool {
    let b = tok.as_bytes();
    b.len() == 2 && (b[0] == b'Q' || b[0] == b'q') && (b'1'..=b'4').contains(&b[1])
}

/// Byte ranges of sentences. Each range runs to the start of the next
/// sentence, so the ranges tile the text exactly.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter, digit or
/// opening quote; or the end of the text. A period never ends a sentence
/// after a known abbreviation, and "Q2." does not end one before a year.
pub fn sentence_spans(text: &str) -> Vec<std::ops::Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let term_idx = i;
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '”' | '’') {
            j += 1;
        }
        let ws_start = j;
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        let at_end = j == chars.len();
        let has_ws = j > ws_start;
        let next = chars.get(j).map(|p| p.1);
        let opens = next.is_some_and(|n| n.is_uppercase() || n.is_ascii_digit() || matches!(n, '"' | '\'' | '“' | '‘'));
        let boundary = (at_end || (has_ws && opens)) && !guarded(text, &chars, term_idx, next);
        if boundary {
            let end = chars.get(j).map_or(text.len(), |p| p.0);
            spans.push(start..end);
            start = end;
        }
        i = j.max(i + 1);
    }
    if start < text.len() {
        spans.push(start..text.len());
    }
    spans
}

fn guarded(text: &str, chars: &[(usize, char)], term_idx: usize, next: Option<char>) -> bool {
    if chars[term_idx].1 != '.' || next.is_none() {
        return false;
    }
    let end = chars[term_idx].0;
    let word_start = text[..end]
        .rfind(|c: char| c.is_whitespace() || c == '(')
        .map_or(0, |p| p + 1);
    let word = &text[word_start..end];
    if ABBREVIATIONS.iter().any(|a| word.eq_ignore_ascii_case(a)) {
        return true;
    }
    is_quarter_token(word) && next.is_some_and(|n| n.is_ascii_digit())
}

/// Split `text` into one chunk per sentence. `attribution[i]` lists the
/// elements sentence `i` refers to; sentences without attribution get no
/// highlight. Highlights pulse the referenced elements' footprints.
pub fn segment_response(text: &str, attribution: &[Vec<ElementId>], frame: &TactileFrame) -> Vec<ResponseChunk> {
    sentence_spans(text)
        .into_iter()
        .enumerate()
        .map(|(index, span)| {
            let referenced = attribution.get(index).cloned().unwrap_or_default();
            let cells: Vec<_> = referenced
                .iter()
                .filter_map(|id| frame.element(*id))
                .flat_map(|e| e.footprint.iter().copied())
                .collect();
            let labels: Vec<&str> = referenced
                .iter()
                .filter_map(|id| frame.element(*id))
                .map(|e| e.label.as_str())
                .collect();
            ResponseChunk {
                index,
                text: text[span].to_string(),
                highlight: (!cells.is_empty()).then(|| HighlightCommand::pulse(cells, Persistence::UntilDismissed)),
                braille_label: (!labels.is_empty()).then(|| labels.join("; ")),
                referenced_elements: referenced,
            }
        })
        .collect()
}
