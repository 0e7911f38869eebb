//! Coordinated tactile, Braille and spoken output.

pub mod chunk;
pub mod playback;

use serde::{Deserialize, Serialize};

pub use chunk::{segment_response, sentence_spans, ResponseChunk};
pub use playback::{play, PlaybackControl, PlaybackEvent, PlaybackKind};

use crate::input::Selection;
use crate::render::{paginate, BrailleLine, Cell, ElementId, TactileFrame, HEIGHT, WIDTH};

pub const DEFAULT_PULSE_HZ: f64 = 2.0;
pub const TOUCH_HIGHLIGHT_MS: u64 = 3000;
pub const SPEECH_MS_PER_CHAR: u64 = 50;
pub const SPEECH_MIN_MS: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "lowercase")]
pub enum HighlightStyle {
    Static,
    Pulse { rate_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    Timed(u64),
    UntilDismissed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightCommand {
    pub cells: Vec<Cell>,
    pub style: HighlightStyle,
    pub persistence: Persistence,
}

impl HighlightCommand {
    pub fn pulse(mut cells: Vec<Cell>, persistence: Persistence) -> Self {
        cells.sort();
        cells.dedup();
        Self {
            cells,
            style: HighlightStyle::Pulse {
                rate_hz: DEFAULT_PULSE_HZ,
            },
            persistence,
        }
    }

    pub fn is_valid(&self) -> bool {
        let rate_ok = match self.style {
            HighlightStyle::Static => true,
            HighlightStyle::Pulse { rate_hz } => (0.5..=4.0).contains(&rate_hz),
        };
        rate_ok
            && self
                .cells
                .iter()
                .all(|c| (c.col as usize) < WIDTH && (c.row as usize) < HEIGHT)
    }
}

/// A timed utterance standing in for text-to-speech.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechEvent {
    pub text: String,
    pub started_at: u64,
    pub duration_ms: u64,
}

impl SpeechEvent {
    pub fn new(text: impl Into<String>, started_at: u64) -> Self {
        let text = text.into();
        let duration_ms = speech_duration(&text);
        Self {
            text,
            started_at,
            duration_ms,
        }
    }

    pub fn ends_at(&self) -> u64 {
        self.started_at + self.duration_ms
    }
}

/// 50 ms per character, at least 300 ms; zero for empty text.
pub fn speech_duration(text: &str) -> u64 {
    match text.chars().count() as u64 {
        0 => 0,
        n => (n * SPEECH_MS_PER_CHAR).max(SPEECH_MIN_MS),
    }
}

/// The 8 cells around `anchor`, clipped to the frame, minus `exclude`.
pub fn ring(anchor: Cell, exclude: &[Cell]) -> Vec<Cell> {
    let mut out = Vec::new();
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            if let Some(c) = Cell::in_frame(anchor.col as i64 + dc, anchor.row as i64 + dr) {
                if !exclude.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Highlight, Braille and speech for one batch of selections, all tied to
/// the same frame and element set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchResponse {
    pub frame_id: u64,
    pub elements: Vec<ElementId>,
    pub highlight: Option<HighlightCommand>,
    pub braille: Vec<BrailleLine>,
    pub speech: SpeechEvent,
}

pub const MISS_TEXT: &str = "No data point here.";

/// Feedback for selections in tap order; an empty slice is a miss.
pub fn touch_response(selections: &[&Selection], frame: &TactileFrame, t: u64) -> TouchResponse {
    if selections.is_empty() {
        return TouchResponse {
            frame_id: frame.frame_id,
            elements: Vec::new(),
            highlight: None,
            braille: paginate("no data"),
            speech: SpeechEvent::new(MISS_TEXT, t),
        };
    }
    let mut cells = Vec::new();
    for s in selections {
        let footprint = frame
            .element(s.element)
            .map(|e| e.footprint.clone())
            .unwrap_or_else(|| vec![s.cell]);
        cells.extend(ring(s.cell, &footprint));
    }
    // Never toggle a pin that belongs to any selected datum.
    let all_fp: Vec<Cell> = selections
        .iter()
        .filter_map(|s| frame.element(s.element))
        .flat_map(|e| e.footprint.iter().copied())
        .collect();
    cells.retain(|c| !all_fp.contains(c));
    let labels: Vec<&str> = selections.iter().map(|s| s.label.as_str()).collect();
    TouchResponse {
        frame_id: frame.frame_id,
        elements: selections.iter().map(|s| s.element).collect(),
        highlight: Some(HighlightCommand::pulse(cells, Persistence::Timed(TOUCH_HIGHLIGHT_MS))),
        braille: paginate(&labels.join("; ")),
        speech: SpeechEvent::new(format!("{}.", labels.join(" ... ")), t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::LoadedChart;
    use crate::input::Finger;
    use crate::render::{render, ViewportState, PLOT_WIDTH};
    use std::path::Path;

    #[test]
    fn speech_duration_stub() {
        assert_eq!(speech_duration(""), 0);
        assert_eq!(speech_duration("hi"), 300);
        assert_eq!(speech_duration(&"x".repeat(10)), 500);
    }

    #[test]
    fn corner_ring_is_clipped() {
        assert_eq!(ring(Cell::new(0, 0), &[]).len(), 3);
        assert_eq!(ring(Cell::new(59, 39), &[]).len(), 3);
        assert_eq!(ring(Cell::new(10, 10), &[Cell::new(11, 10)]).len(), 7);
    }

    #[test]
    fn worked_example_feedback_text() {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/catalogue/interest_rates.vl.json");
        let c = LoadedChart::from_path(&p).unwrap();
        let f = render(&c, &ViewportState::initial(&c, PLOT_WIDTH), 1).unwrap();
        let data: Vec<_> = f.data().collect();
        let a = Selection::new(&c, data[0], 1, Finger::LeftIndex, 1.0, 100, 30_000).unwrap();
        let b = Selection::new(&c, data[12], 1, Finger::RightIndex, 1.0, 900, 30_000).unwrap();
        let r = touch_response(&[&a, &b], &f, 900);
        assert_eq!(
            r.speech.text,
            "2020 Quarter 2, interest 0.25% ... 2023 Quarter 2, interest 3.85%."
        );
        let h = r.highlight.unwrap();
        assert!(h.is_valid());
        assert!(!h.cells.contains(&data[0].grid_position));
        assert_eq!(r.elements, vec![data[0].id, data[12].id]);
        assert_eq!(r.frame_id, f.frame_id);
    }

    #[test]
    fn miss_has_no_highlight() {
        let f = TactileFrame::blank(3);
        let r = touch_response(&[], &f, 0);
        assert!(r.highlight.is_none());
        assert_eq!(r.speech.text, MISS_TEXT);
    }
}
