//! Three-state button model: quick tap, long hold, and two-button combos.
//!
//! Time only moves forward through [`ButtonClassifier::push`] and
//! [`ButtonClassifier::advance`], so a recorded stream always replays to the
//! same actions.
//!
//! - quick tap: down to up in under `quick_tap_ms`. Reported once the combo
//!   window after its down edge has closed, since a second down inside that
//!   window turns it into a combo.
//! - hold: fires once, `hold_ms` after the down edge, while still held.
//! - combo: two down edges at most `combo_window_ms` apart. Both buttons'
//!   own actions are suppressed.
//! - anything between a quick tap and a hold does nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::InputConfig;
use crate::render::{PanDirection, ZoomMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Button {
    Left,
    F1,
    F2,
    F3,
    F4,
    Right,
}

impl Button {
    pub const ALL: [Button; 6] = [
        Button::Left,
        Button::F1,
        Button::F2,
        Button::F3,
        Button::F4,
        Button::Right,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ButtonEvent {
    pub button: Button,
    pub edge: Edge,
    pub t: u64,
}

/// How a press was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Press {
    Quick(Button),
    Hold(Button),
    /// Buttons in down-edge order.
    Combo(Button, Button),
}

/// What a press means to the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    PageLeft,
    PageRight,
    PreviousPoint,
    NextPoint,
    PushToTalk,
    Stop,
    Repeat,
    Refresh,
    Pan(PanDirection),
    Zoom(ZoomMode),
    UnmappedCombo,
    /// A quick tap with no assigned meaning.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ButtonAction {
    pub t: u64,
    pub press: Press,
    pub action: Action,
}

impl Press {
    pub fn action(self) -> Action {
        use Button::*;
        match self {
            Press::Quick(Left) => Action::PageLeft,
            Press::Quick(Right) => Action::PageRight,
            Press::Quick(_) => Action::None,
            Press::Hold(Left) => Action::PreviousPoint,
            Press::Hold(Right) => Action::NextPoint,
            Press::Hold(F1) => Action::PushToTalk,
            Press::Hold(F2) => Action::Stop,
            Press::Hold(F3) => Action::Repeat,
            Press::Hold(F4) => Action::Refresh,
            Press::Combo(a, b) => {
                let (side, f) = match (a, b) {
                    (Left | Right, F1 | F2 | F3 | F4) => (a, b),
                    (F1 | F2 | F3 | F4, Left | Right) => (b, a),
                    _ => return Action::UnmappedCombo,
                };
                let left = side == Left;
                match f {
                    F1 => Action::Pan(if left { PanDirection::Left } else { PanDirection::Right }),
                    F2 => Action::Zoom(if left {
                        ZoomMode::GeometricOut
                    } else {
                        ZoomMode::GeometricIn
                    }),
                    F3 => Action::Pan(if left { PanDirection::Down } else { PanDirection::Up }),
                    F4 => Action::Zoom(if left {
                        ZoomMode::SemanticOut
                    } else {
                        ZoomMode::SemanticIn
                    }),
                    _ => Action::UnmappedCombo,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Held {
    down_t: u64,
    in_combo: bool,
    hold_fired: bool,
}

#[derive(Debug, Clone, Copy)]
struct Recent {
    down_t: u64,
    /// Release time if released as a quick tap.
    quick_up: Option<u64>,
    in_combo: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ButtonClassifier {
    cfg: InputConfig,
    held: BTreeMap<Button, Held>,
    /// Down edges still inside their combo window, keyed by button.
    recent: BTreeMap<Button, Recent>,
    now: u64,
    /// Edges that did not alternate (down while down, up while up).
    pub rejected: usize,
}

impl ButtonClassifier {
    pub fn new(cfg: InputConfig) -> Self {
        Self { cfg, ..Self::default() }
    }

    pub fn push(&mut self, ev: ButtonEvent) -> Vec<ButtonAction> {
        let mut out = self.advance(ev.t);
        match ev.edge {
            Edge::Down => {
                if self.held.contains_key(&ev.button) {
                    self.rejected += 1;
                    return out;
                }
                let window = self.cfg.combo_window_ms;
                let partner = self
                    .recent
                    .iter()
                    .filter(|(b, r)| **b != ev.button && !r.in_combo && ev.t - r.down_t <= window)
                    .min_by_key(|(b, r)| (r.down_t, **b))
                    .map(|(b, _)| *b);
                let in_combo = partner.is_some();
                if let Some(p) = partner {
                    if let Some(r) = self.recent.get_mut(&p) {
                        r.in_combo = true;
                    }
                    if let Some(h) = self.held.get_mut(&p) {
                        h.in_combo = true;
                    }
                    let press = Press::Combo(p, ev.button);
                    out.push(ButtonAction {
                        t: ev.t,
                        press,
                        action: press.action(),
                    });
                }
                self.held.insert(
                    ev.button,
                    Held {
                        down_t: ev.t,
                        in_combo,
                        hold_fired: false,
                    },
                );
                self.recent.insert(
                    ev.button,
                    Recent {
                        down_t: ev.t,
                        quick_up: None,
                        in_combo,
                    },
                );
            }
            Edge::Up => {
                let Some(h) = self.held.remove(&ev.button) else {
                    self.rejected += 1;
                    return out;
                };
                if h.in_combo || h.hold_fired {
                    return out;
                }
                if ev.t - h.down_t < self.cfg.quick_tap_ms {
                    match self.recent.get_mut(&ev.button) {
                        Some(r) if r.down_t == h.down_t => r.quick_up = Some(ev.t),
                        _ => out.push(quick(ev.button, ev.t)),
                    }
                }
            }
        }
        out
    }

    /// Move the clock to `now`, firing holds that have matured and quick taps
    /// whose combo window has closed.
    pub fn advance(&mut self, now: u64) -> Vec<ButtonAction> {
        let now = now.max(self.now);
        self.now = now;
        let mut out = Vec::new();
        for (&b, h) in self.held.iter_mut() {
            let due = h.down_t + self.cfg.hold_ms;
            if !h.in_combo && !h.hold_fired && now >= due {
                h.hold_fired = true;
                let press = Press::Hold(b);
                out.push(ButtonAction {
                    t: due,
                    press,
                    action: press.action(),
                });
            }
        }
        let window = self.cfg.combo_window_ms;
        let closed: Vec<Button> = self
            .recent
            .iter()
            .filter(|(_, r)| now > r.down_t + window)
            .map(|(b, _)| *b)
            .collect();
        for b in closed {
            if let Some(r) = self.recent.get(&b) {
                if r.quick_up.is_none() && self.held.get(&b).is_some_and(|h| h.down_t == r.down_t) {
                    // Still held: only the window is over.
                    self.recent.remove(&b);
                    continue;
                }
            }
            if let Some(Recent {
                down_t,
                quick_up: Some(up),
                in_combo: false,
            }) = self.recent.remove(&b)
            {
                out.push(quick(b, up.max(down_t + window)));
            }
        }
        out.sort_by_key(|a| a.t);
        out
    }

    /// End of stream. Pending quick taps are reported; presses still held
    /// report nothing further.
    pub fn finish(&mut self) -> Vec<ButtonAction> {
        let mut out: Vec<ButtonAction> = std::mem::take(&mut self.recent)
            .into_iter()
            .filter_map(|(b, r)| match r {
                Recent {
                    quick_up: Some(up),
                    in_combo: false,
                    down_t,
                } => Some(quick(b, up.max(down_t + self.cfg.combo_window_ms))),
                _ => None,
            })
            .collect();
        self.held.clear();
        out.sort_by_key(|a| a.t);
        out
    }
}

fn quick(b: Button, t: u64) -> ButtonAction {
    let press = Press::Quick(b);
    ButtonAction {
        t,
        press,
        action: press.action(),
    }
}

/// Classify a whole recorded stream.
pub fn classify(events: &[ButtonEvent], cfg: InputConfig) -> Vec<ButtonAction> {
    let mut c = ButtonClassifier::new(cfg);
    let mut out: Vec<ButtonAction> = events.iter().flat_map(|&e| c.push(e)).collect();
    out.extend(c.finish());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(button: Button, edge: Edge, t: u64) -> ButtonEvent {
        ButtonEvent { button, edge, t }
    }

    fn run(events: &[ButtonEvent]) -> Vec<ButtonAction> {
        classify(events, InputConfig::default())
    }

    #[test]
    fn quick_left_pages_left() {
        let a = run(&[ev(Button::Left, Edge::Down, 0), ev(Button::Left, Edge::Up, 150)]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].action, Action::PageLeft);
        assert_eq!(a[0].t, 150);
    }

    #[test]
    fn f1_hold_fires_at_500() {
        let a = run(&[ev(Button::F1, Edge::Down, 0), ev(Button::F1, Edge::Up, 600)]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].action, Action::PushToTalk);
        assert_eq!(a[0].t, 500);
    }

    #[test]
    fn combo_within_100ms_suppresses_paging() {
        let a = run(&[
            ev(Button::Left, Edge::Down, 0),
            ev(Button::Right, Edge::Down, 80),
            ev(Button::Left, Edge::Up, 120),
            ev(Button::Right, Edge::Up, 150),
        ]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].press, Press::Combo(Button::Left, Button::Right));
        assert_eq!(a[0].action, Action::UnmappedCombo);
    }

    #[test]
    fn quick_tap_retracted_by_late_combo_partner() {
        let a = run(&[
            ev(Button::Right, Edge::Down, 0),
            ev(Button::Right, Edge::Up, 40),
            ev(Button::F2, Edge::Down, 100),
            ev(Button::F2, Edge::Up, 700),
        ]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].action, Action::Zoom(ZoomMode::GeometricIn));
    }

    #[test]
    fn boundaries_are_exact() {
        let q = |d: u64| run(&[ev(Button::Left, Edge::Down, 1000), ev(Button::Left, Edge::Up, 1000 + d)]);
        assert_eq!(q(199).len(), 1);
        assert!(q(200).is_empty());
        assert!(q(499).is_empty());
        assert_eq!(q(500)[0].press, Press::Hold(Button::Left));
        let c = |gap| {
            run(&[
                ev(Button::Left, Edge::Down, 0),
                ev(Button::F1, Edge::Down, gap),
                ev(Button::Left, Edge::Up, 300),
                ev(Button::F1, Edge::Up, 300),
            ])
        };
        assert_eq!(c(100)[0].action, Action::Pan(PanDirection::Left));
        assert!(c(101).iter().all(|a| !matches!(a.press, Press::Combo(..))));
    }

    #[test]
    fn dangling_down_emits_nothing() {
        assert!(run(&[ev(Button::F3, Edge::Down, 0)]).is_empty());
    }

    #[test]
    fn combo_map() {
        use Button::*;
        let m = |a, b| Press::Combo(a, b).action();
        assert_eq!(m(Left, F1), Action::Pan(PanDirection::Left));
        assert_eq!(m(F1, Right), Action::Pan(PanDirection::Right));
        assert_eq!(m(Left, F2), Action::Zoom(ZoomMode::GeometricOut));
        assert_eq!(m(Right, F2), Action::Zoom(ZoomMode::GeometricIn));
        assert_eq!(m(F1, F2), Action::UnmappedCombo);
    }
}
