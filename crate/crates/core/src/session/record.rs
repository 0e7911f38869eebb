//! Recorded sessions: one `{t, kind, payload}` JSON object per line.
//! Format reference: docs/session-format.md.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::input::{gesture::tap_profile, Button, ButtonEvent, Edge, Finger, TouchFrame};

/// Spacing of synthesized touch frames, ms.
pub const SYNTH_STEP_MS: u64 = 20;
/// Frames on the surface per synthesized tap.
pub const SYNTH_CONTACT_FRAMES: usize = 3;
/// Offset of the second tap of a synthesized double tap.
pub const SYNTH_SECOND_TAP_MS: u64 = 150;
/// Default length of a synthesized button press.
pub const SYNTH_PRESS_MS: u64 = 100;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouchPayload {
    pub finger: Finger,
    pub x: f64,
    pub y: f64,
    pub height: f64,
    #[serde(default = "one")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPayload {
    pub finger: Finger,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressPayload {
    pub button: Button,
    #[serde(default)]
    pub hold_ms: Option<u64>,
}

/// One input to a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum SessionInput {
    /// Load a chart by catalogue name.
    Load {
        chart: String,
    },
    Touch(TouchPayload),
    Button {
        button: Button,
        edge: Edge,
    },
    Query {
        transcript: String,
    },
    /// Shorthand: a deliberate tap at a point.
    Tap(PointPayload),
    /// Shorthand: two deliberate taps at a point.
    DoubleTap(PointPayload),
    /// Shorthand: down, then up after `hold_ms` (default 100).
    Press(PressPayload),
    /// Let time run to `t` without input.
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedEvent {
    pub t: u64,
    #[serde(flatten)]
    pub input: SessionInput,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    t: u64,
    kind: String,
    #[serde(default)]
    payload: Json,
}

/// Parse one `kind` + `payload` pair, as found in session files and in
/// console `session/event` messages.
pub fn parse_input(kind: &str, payload: Json) -> Result<SessionInput, String> {
    let field = |e: serde_json::Error| e.to_string();
    Ok(match kind {
        "load" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct L {
                chart: String,
            }
            let l: L = serde_json::from_value(payload).map_err(field)?;
            SessionInput::Load { chart: l.chart }
        }
        "touch" => SessionInput::Touch(serde_json::from_value(payload).map_err(field)?),
        "button" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct B {
                button: Button,
                edge: Edge,
            }
            let b: B = serde_json::from_value(payload).map_err(field)?;
            SessionInput::Button {
                button: b.button,
                edge: b.edge,
            }
        }
        "query" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Q {
                transcript: String,
            }
            let q: Q = serde_json::from_value(payload).map_err(field)?;
            if q.transcript.trim().is_empty() {
                return Err("empty transcript".into());
            }
            SessionInput::Query {
                transcript: q.transcript,
            }
        }
        "tap" => SessionInput::Tap(serde_json::from_value(payload).map_err(field)?),
        "double_tap" => SessionInput::DoubleTap(serde_json::from_value(payload).map_err(field)?),
        "press" => SessionInput::Press(serde_json::from_value(payload).map_err(field)?),
        "end" => SessionInput::End,
        other => return Err(format!("unknown event kind {other:?}")),
    })
}

/// Parse a session file. Blank lines and lines starting with `#` are
/// skipped; timestamps must not decrease.
pub fn parse_session(text: &str) -> Result<Vec<RecordedEvent>, SyntaxError> {
    let mut out = Vec::new();
    let mut last_t = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| SyntaxError { line: line_no, message };
        let raw: RawLine = serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
        if raw.t < last_t {
            return Err(err(format!("time {} is before the previous event at {last_t}", raw.t)));
        }
        last_t = raw.t;
        let input = parse_input(&raw.kind, raw.payload).map_err(|m| err(format!("{}: {m}", raw.kind)))?;
        out.push(RecordedEvent { t: raw.t, input });
    }
    Ok(out)
}

/// A primitive input after shorthand expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Load(String),
    Touch(TouchFrame),
    Button(ButtonEvent),
    Query(String),
    End,
}

impl Primitive {
    pub fn t(&self, at: u64) -> u64 {
        match self {
            Primitive::Touch(f) => f.t,
            Primitive::Button(b) => b.t,
            _ => at,
        }
    }
}

/// Expand shorthands into primitive inputs, ordered by time (stable).
pub fn expand(events: &[RecordedEvent]) -> Vec<(u64, Primitive)> {
    let mut out: Vec<(u64, Primitive)> = Vec::new();
    for ev in events {
        let t = ev.t;
        match &ev.input {
            SessionInput::Load { chart } => out.push((t, Primitive::Load(chart.clone()))),
            SessionInput::Query { transcript } => out.push((t, Primitive::Query(transcript.clone()))),
            SessionInput::End => out.push((t, Primitive::End)),
            SessionInput::Touch(p) => out.push((
                t,
                Primitive::Touch(TouchFrame {
                    t,
                    finger: p.finger,
                    x: p.x,
                    y: p.y,
                    height: p.height,
                    confidence: p.confidence,
                }),
            )),
            SessionInput::Button { button, edge } => out.push((
                t,
                Primitive::Button(ButtonEvent {
                    button: *button,
                    edge: *edge,
                    t,
                }),
            )),
            SessionInput::Tap(p) => out.extend(
                tap_profile(p.finger, p.x, p.y, t, SYNTH_STEP_MS, SYNTH_CONTACT_FRAMES)
                    .into_iter()
                    .map(|f| (f.t, Primitive::Touch(f))),
            ),
            SessionInput::DoubleTap(p) => {
                for t0 in [t, t + SYNTH_SECOND_TAP_MS] {
                    out.extend(
                        tap_profile(p.finger, p.x, p.y, t0, SYNTH_STEP_MS, SYNTH_CONTACT_FRAMES)
                            .into_iter()
                            .map(|f| (f.t, Primitive::Touch(f))),
                    );
                }
            }
            SessionInput::Press(p) => {
                let hold = p.hold_ms.unwrap_or(SYNTH_PRESS_MS);
                for (edge, at) in [(Edge::Down, t), (Edge::Up, t + hold)] {
                    out.push((
                        at,
                        Primitive::Button(ButtonEvent {
                            button: p.button,
                            edge,
                            t: at,
                        }),
                    ));
                }
            }
        }
    }
    out.sort_by_key(|(t, _)| *t);
    out
}

/// Serialize events back to the line format.
pub fn write_session(events: &[RecordedEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).unwrap_or_default() + "\n")
        .collect()
}
