//! Contact detection and tap classification from a touch-frame stream.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::target::Target;
use super::InputConfig;
use crate::render::{Cell, HEIGHT, WIDTH};

/// Only index fingers are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finger {
    LeftIndex,
    RightIndex,
}

/// One hand-tracker sample for one finger, in pin units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchFrame {
    pub t: u64,
    pub finger: Finger,
    pub x: f64,
    pub y: f64,
    /// Height above the surface, mm.
    pub height: f64,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

impl TouchFrame {
    pub fn cell(&self) -> Cell {
        let col = (self.x.floor() as i64).clamp(0, WIDTH as i64 - 1);
        let row = (self.y.floor() as i64).clamp(0, HEIGHT as i64 - 1);
        Cell::new(col as u8, row as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    ContactStart,
    ContactMove,
    ContactEnd,
    Tap,
    DoubleTap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub kind: GestureKind,
    pub finger: Finger,
    pub cell: Cell,
    /// Continuous contact point the event was classified at.
    pub position: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    pub t: u64,
}

fn chebyshev(a: Cell, b: Cell) -> u8 {
    a.col.abs_diff(b.col).max(a.row.abs_diff(b.row))
}

#[derive(Debug, Clone, Default)]
struct FingerState {
    last_t: Option<u64>,
    low_run: u32,
    in_contact: bool,
    cell: Option<Cell>,
    /// Last continuous position while in contact.
    pos: (f64, f64),
}

/// Debounced, hysteretic contact detection per finger.
#[derive(Debug, Clone, Default)]
pub struct ContactDetector {
    cfg: InputConfig,
    fingers: BTreeMap<Finger, FingerState>,
    /// Frames dropped for low tracking confidence.
    pub dropped_low_confidence: usize,
    /// Frames dropped because their timestamp did not increase.
    pub dropped_out_of_order: usize,
}

impl ContactDetector {
    pub fn new(cfg: InputConfig) -> Self {
        Self { cfg, ..Self::default() }
    }

    pub fn push(&mut self, f: &TouchFrame) -> Vec<GestureEvent> {
        if !(f.confidence >= self.cfg.min_confidence) {
            self.dropped_low_confidence += 1;
            return Vec::new();
        }
        let st = self.fingers.entry(f.finger).or_default();
        if st.last_t.is_some_and(|last| f.t <= last) {
            self.dropped_out_of_order += 1;
            return Vec::new();
        }
        st.last_t = Some(f.t);
        let ev = |kind, cell| GestureEvent {
            kind,
            finger: f.finger,
            cell,
            position: (f.x, f.y),
            target: None,
            t: f.t,
        };
        let cell = f.cell();
        if st.in_contact {
            if f.height > self.cfg.release_mm {
                // The lift-off sample may drift; report where the finger was.
                st.in_contact = false;
                st.low_run = 0;
                let last = st.cell.take().unwrap_or(cell);
                return vec![GestureEvent {
                    position: st.pos,
                    ..ev(GestureKind::ContactEnd, last)
                }];
            }
            st.pos = (f.x, f.y);
            if st.cell != Some(cell) {
                st.cell = Some(cell);
                return vec![ev(GestureKind::ContactMove, cell)];
            }
            return Vec::new();
        }
        if f.height <= self.cfg.contact_mm {
            st.low_run += 1;
            if st.low_run >= self.cfg.debounce_frames {
                st.in_contact = true;
                st.cell = Some(cell);
                st.pos = (f.x, f.y);
                return vec![ev(GestureKind::ContactStart, cell)];
            }
        } else {
            st.low_run = 0;
        }
        Vec::new()
    }

    pub fn in_contact(&self, finger: Finger) -> bool {
        self.fingers.get(&finger).is_some_and(|s| s.in_contact)
    }
}

#[derive(Debug, Clone)]
struct Touch {
    start_t: u64,
    start_cell: Cell,
    moved: u8,
}

#[derive(Debug, Clone)]
struct PendingTap {
    end_t: u64,
    event: GestureEvent,
    /// A new contact started inside the double-tap gap, near this tap.
    awaiting_second: bool,
}

/// Turns contact events into taps and double taps. A tap is held back until
/// the double-tap gap has passed so a following tap can absorb it.
#[derive(Debug, Clone, Default)]
pub struct TapClassifier {
    cfg: InputConfig,
    touches: BTreeMap<Finger, Touch>,
    pending: BTreeMap<Finger, PendingTap>,
}

impl TapClassifier {
    pub fn new(cfg: InputConfig) -> Self {
        Self { cfg, ..Self::default() }
    }

    pub fn push(&mut self, ev: &GestureEvent) -> Vec<GestureEvent> {
        let mut out = self.advance(ev.t);
        match ev.kind {
            GestureKind::ContactStart => {
                if let Some(p) = self.pending.get_mut(&ev.finger) {
                    let near = chebyshev(p.event.cell, ev.cell) <= self.cfg.double_tap_max_cells;
                    if near && ev.t.saturating_sub(p.end_t) <= self.cfg.double_tap_gap_ms {
                        p.awaiting_second = true;
                    } else if let Some(p) = self.pending.remove(&ev.finger) {
                        out.push(p.event);
                    }
                }
                self.touches.insert(
                    ev.finger,
                    Touch {
                        start_t: ev.t,
                        start_cell: ev.cell,
                        moved: 0,
                    },
                );
            }
            GestureKind::ContactMove => {
                if let Some(t) = self.touches.get_mut(&ev.finger) {
                    t.moved = t.moved.max(chebyshev(t.start_cell, ev.cell));
                }
            }
            GestureKind::ContactEnd => {
                let Some(touch) = self.touches.remove(&ev.finger) else {
                    return out;
                };
                let is_tap = ev.t - touch.start_t <= self.cfg.tap_max_ms && touch.moved <= self.cfg.tap_max_cells;
                let prior = self.pending.remove(&ev.finger);
                if !is_tap {
                    out.extend(prior.map(|p| p.event));
                    return out;
                }
                let tap = GestureEvent {
                    kind: GestureKind::Tap,
                    finger: ev.finger,
                    cell: ev.cell,
                    position: ev.position,
                    target: None,
                    t: ev.t,
                };
                match prior {
                    Some(p) if p.awaiting_second => out.push(GestureEvent {
                        kind: GestureKind::DoubleTap,
                        ..tap
                    }),
                    other => {
                        out.extend(other.map(|p| p.event));
                        self.pending.insert(
                            ev.finger,
                            PendingTap {
                                end_t: ev.t,
                                event: tap,
                                awaiting_second: false,
                            },
                        );
                    }
                }
            }
            GestureKind::Tap | GestureKind::DoubleTap => {}
        }
        out
    }

    /// Release taps whose double-tap window closed before `now`.
    pub fn advance(&mut self, now: u64) -> Vec<GestureEvent> {
        let gap = self.cfg.double_tap_gap_ms;
        let expired: Vec<Finger> = self
            .pending
            .iter()
            .filter(|(_, p)| !p.awaiting_second && now > p.end_t + gap)
            .map(|(f, _)| *f)
            .collect();
        expired
            .into_iter()
            .filter_map(|f| self.pending.remove(&f).map(|p| p.event))
            .collect()
    }

    /// End of stream: every held-back tap is a single tap.
    pub fn finish(&mut self) -> Vec<GestureEvent> {
        let mut out: Vec<GestureEvent> = std::mem::take(&mut self.pending)
            .into_values()
            .map(|p| p.event)
            .collect();
        out.sort_by_key(|e| e.t);
        out
    }
}

/// Contact detection and tap classification in one pipeline.
#[derive(Debug, Clone, Default)]
pub struct GestureRecognizer {
    pub contacts: ContactDetector,
    pub taps: TapClassifier,
}

impl GestureRecognizer {
    pub fn new(cfg: InputConfig) -> Self {
        Self {
            contacts: ContactDetector::new(cfg),
            taps: TapClassifier::new(cfg),
        }
    }

    /// Contact events followed by any taps they complete.
    pub fn push(&mut self, f: &TouchFrame) -> Vec<GestureEvent> {
        let mut out = self.taps.advance(f.t);
        for ev in self.contacts.push(f) {
            let taps = self.taps.push(&ev);
            out.push(ev);
            out.extend(taps);
        }
        out
    }

    pub fn advance(&mut self, now: u64) -> Vec<GestureEvent> {
        self.taps.advance(now)
    }

    pub fn finish(&mut self) -> Vec<GestureEvent> {
        self.taps.finish()
    }
}

/// Height profile of a deliberate tap: approach, `contact_frames` frames on
/// the surface, retreat. Frames are `step` ms apart starting at `t0`.
pub fn tap_profile(finger: Finger, x: f64, y: f64, t0: u64, step: u64, contact_frames: usize) -> Vec<TouchFrame> {
    let heights = std::iter::once(8.0)
        .chain(std::iter::repeat_n(1.0, contact_frames))
        .chain(std::iter::once(8.0));
    heights
        .enumerate()
        .map(|(i, height)| TouchFrame {
            t: t0 + i as u64 * step,
            finger,
            x,
            y,
            height,
            confidence: 1.0,
        })
        .collect()
}
