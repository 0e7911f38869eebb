//! Touch and button input: contact detection, gesture classification, target
//! inference, the three-state button model, and the cached touch context.

pub mod buttons;
pub mod context;
pub mod gesture;
pub mod target;

use serde::{Deserialize, Serialize};

pub use buttons::{Action, Button, ButtonAction, ButtonClassifier, ButtonEvent, Edge, Press};
pub use context::{Selection, TouchContext};
pub use gesture::{ContactDetector, Finger, GestureEvent, GestureKind, GestureRecognizer, TapClassifier, TouchFrame};
pub use target::{infer_target, score_candidates, Target};

/// Every tunable constant of the input pipeline. Only these defaults are
/// assumed elsewhere; nothing else hard-codes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    /// A finger at or below this height is touching.
    pub contact_mm: f64,
    /// Contact ends only once the finger rises above this height.
    pub release_mm: f64,
    /// Consecutive low frames needed to start a contact.
    pub debounce_frames: u32,
    pub min_confidence: f64,
    pub tap_max_ms: u64,
    pub tap_max_cells: u8,
    /// Gap from the end of one tap to the start of the next.
    pub double_tap_gap_ms: u64,
    pub double_tap_max_cells: u8,
    /// Gaussian spread in pins.
    pub sigma: f64,
    /// Candidate radius in pins.
    pub radius: f64,
    pub selection_ttl_ms: u64,
    pub quick_tap_ms: u64,
    pub hold_ms: u64,
    pub combo_window_ms: u64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            contact_mm: 2.0,
            release_mm: 4.0,
            debounce_frames: 2,
            min_confidence: 0.3,
            tap_max_ms: 250,
            tap_max_cells: 1,
            double_tap_gap_ms: 400,
            double_tap_max_cells: 1,
            sigma: 1.0,
            radius: 3.0,
            selection_ttl_ms: 30_000,
            quick_tap_ms: 200,
            hold_ms: 500,
            combo_window_ms: 100,
        }
    }
}
