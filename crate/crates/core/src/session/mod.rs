//! A single-owner session: one chart, one viewport, one dialogue, one
//! simulated display. Inputs arrive in time order; every observable effect
//! is appended to a log and, when a bus is attached, published.

pub mod record;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use record::{
    expand, parse_input, parse_session, write_session, Primitive, RecordedEvent, SessionInput, SyntaxError,
};

use crate::agent::{Agent, AgentCommand, AgentEnv, AgentQuery, AgentResponse, AnswerSource, Operation};
use crate::bus::{Bus, AGENT_COMMAND, AGENT_RESPONSE, DEVICE_FRAME, SESSION_EVENT};
use crate::chart::{ChartCatalogue, LoadedChart};
use crate::device::{packet::pack_pins, pulse_packet, Device, Packet, SimulatedDevice};
use crate::input::{
    infer_target, Action, ButtonAction, ButtonClassifier, ButtonEvent, Finger, GestureEvent, GestureKind,
    GestureRecognizer, InputConfig, Press, Selection, TouchContext, TouchFrame,
};
use crate::output::{
    play, segment_response, speech_duration, touch_response, PlaybackControl, PlaybackEvent, PlaybackKind,
    ResponseChunk, DEFAULT_PULSE_HZ, MISS_TEXT,
};
use crate::render::{
    paginate, render, BrailleLine, Cell, ElementId, ElementKind, TactileFrame, ViewportState, PLOT_WIDTH,
};

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub t: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    Frame {
        frame_id: u64,
        digest: String,
        layer: Option<String>,
        elements: usize,
    },
    Selection {
        finger: Finger,
        element: ElementId,
        label: String,
        probability: f64,
    },
    Miss {
        finger: Finger,
        x: f64,
        y: f64,
    },
    Speech {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        chunk: Option<usize>,
        text: String,
    },
    Highlight {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        chunk: Option<usize>,
        cells: usize,
    },
    Clear,
    Braille {
        text: String,
    },
    Query {
        transcript: String,
        augmented: String,
        confidence: f64,
    },
    Response {
        intent: String,
        text: String,
        word_count: usize,
        chunks: usize,
        source: AnswerSource,
    },
    Action {
        press: Press,
        action: Action,
    },
    Notice {
        text: String,
    },
    /// Final line of a replay.
    Digest {
        frame: String,
        device: String,
    },
}

impl LogLine {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// A response being played chunk by chunk.
#[derive(Debug, Clone)]
struct Playback {
    chunks: Vec<ResponseChunk>,
    start: u64,
    controls: Vec<(u64, PlaybackControl)>,
    emitted: usize,
}

impl Playback {
    fn events(&self) -> Vec<PlaybackEvent> {
        play(&self.chunks, &self.controls, self.start)
    }

    fn finished(&self) -> bool {
        self.emitted >= self.events().len()
    }
}

/// Everything a query needs, detached from the session so it can run on
/// another thread while input processing continues.
#[derive(Debug, Clone)]
pub struct PendingQuery {
    pub generation: u64,
    pub query: AgentQuery,
    chart: Option<Arc<LoadedChart>>,
    frame: TactileFrame,
    viewport: Option<ViewportState>,
    catalogue: Arc<ChartCatalogue>,
}

impl PendingQuery {
    pub fn run(&self, agent: &mut Agent) -> AgentResponse {
        let env = AgentEnv {
            chart: self.chart.as_deref(),
            frame: Some(&self.frame),
            viewport: self.viewport.as_ref(),
            catalogue: Some(&self.catalogue),
        };
        agent.respond(&self.query, &env)
    }
}

pub struct Session {
    cfg: InputConfig,
    catalogue: Arc<ChartCatalogue>,
    chart: Option<Arc<LoadedChart>>,
    chart_name: Option<String>,
    viewport: Option<ViewportState>,
    frame: TactileFrame,
    next_frame_id: u64,
    gestures: GestureRecognizer,
    buttons: ButtonClassifier,
    touch: TouchContext,
    agent: Arc<Mutex<Agent>>,
    pub device: SimulatedDevice,
    log: Vec<LogLine>,
    playback: Option<Playback>,
    last_chunks: Vec<ResponseChunk>,
    braille_pages: Vec<BrailleLine>,
    braille_page: usize,
    cursor: Option<usize>,
    bus: Option<Bus>,
    turn: u64,
    generation: u64,
    now: u64,
    highlight_until: u64,
    dialogue_id: String,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("chart", &self.chart_name)
            .field("frame_id", &self.frame.frame_id)
            .field("now", &self.now)
            .field("turn", &self.turn)
            .finish()
    }
}

impl Session {
    pub fn new(catalogue: Arc<ChartCatalogue>, cfg: InputConfig, agent: Agent) -> Self {
        Self {
            cfg,
            catalogue,
            chart: None,
            chart_name: None,
            viewport: None,
            frame: TactileFrame::blank(0),
            next_frame_id: 1,
            gestures: GestureRecognizer::new(cfg),
            buttons: ButtonClassifier::new(cfg),
            touch: TouchContext::default(),
            agent: Arc::new(Mutex::new(agent)),
            device: SimulatedDevice::new(),
            log: Vec::new(),
            playback: None,
            last_chunks: Vec::new(),
            braille_pages: Vec::new(),
            braille_page: 0,
            cursor: None,
            bus: None,
            turn: 0,
            generation: 0,
            now: 0,
            highlight_until: 0,
            dialogue_id: "session".into(),
        }
    }

    /// Publish log lines, frames, responses and commands on `bus`.
    pub fn attach_bus(&mut self, bus: Bus) {
        self.bus = Some(bus);
    }

    pub fn set_dialogue_id(&mut self, id: impl Into<String>) {
        self.dialogue_id = id.into();
    }

    pub fn agent(&self) -> Arc<Mutex<Agent>> {
        self.agent.clone()
    }

    pub fn log(&self) -> &[LogLine] {
        &self.log
    }

    /// Take the log lines written so far.
    pub fn drain_log(&mut self) -> Vec<LogLine> {
        std::mem::take(&mut self.log)
    }

    pub fn frame(&self) -> &TactileFrame {
        &self.frame
    }

    pub fn chart(&self) -> Option<&LoadedChart> {
        self.chart.as_deref()
    }

    pub fn viewport(&self) -> Option<&ViewportState> {
        self.viewport.as_ref()
    }

    pub fn touch(&self) -> &TouchContext {
        &self.touch
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn catalogue(&self) -> &ChartCatalogue {
        &self.catalogue
    }

    fn emit(&mut self, t: u64, event: LogEvent) {
        let line = LogLine { t, event };
        if let Some(bus) = &self.bus {
            if let Ok(v) = serde_json::to_value(&line) {
                if let Err(e) = bus.publish_at(SESSION_EVENT, v, t) {
                    log::warn!("bus: {e}");
                }
            }
        }
        self.log.push(line);
    }

    fn publish(&self, topic: &str, payload: serde_json::Value, t: u64) {
        if let Some(bus) = &self.bus {
            if let Err(e) = bus.publish_at(topic, payload, t) {
                log::warn!("bus: {e}");
            }
        }
    }

    fn send(&mut self, t: u64, packet: &Packet) {
        if let Err(e) = self.device.send(t, packet) {
            log::warn!("device: {e}");
        }
    }

    fn tick(&mut self, t: u64) {
        self.now = self.now.max(t);
    }

    /// Apply one expanded input at `t`.
    pub fn apply(&mut self, t: u64, input: Primitive) {
        match input {
            Primitive::Touch(f) => self.touch_frame(f),
            Primitive::Button(b) => self.button(b),
            Primitive::Load(name) => {
                self.advance(t);
                self.load(&name, t);
            }
            Primitive::Query(text) => {
                self.advance(t);
                self.query(&text, t);
            }
            Primitive::End => self.advance(t),
        }
    }

    /// Let time pass: complete pending gestures and button presses and play
    /// out due output.
    pub fn advance(&mut self, now: u64) {
        self.tick(now);
        for g in self.gestures.advance(now) {
            self.gesture(g);
        }
        for a in self.buttons.advance(now) {
            self.button_action(a);
        }
        self.flush_playback(now);
        self.touch.prune(now);
    }

    pub fn touch_frame(&mut self, f: TouchFrame) {
        self.advance(f.t);
        for g in self.gestures.push(&f) {
            self.gesture(g);
        }
    }

    pub fn button(&mut self, ev: ButtonEvent) {
        self.advance(ev.t);
        for a in self.buttons.push(ev) {
            self.button_action(a);
        }
    }

    /// Close out pending input and play any remaining output to its end.
    pub fn finish(&mut self) {
        for g in self.gestures.finish() {
            self.gesture(g);
        }
        for a in self.buttons.finish() {
            self.button_action(a);
        }
        self.flush_playback(u64::MAX);
    }

    // ---- frames -------------------------------------------------------

    /// Render the current viewport as a new frame and push it to the device.
    fn show(&mut self, t: u64) {
        let (Some(chart), Some(vp)) = (self.chart.clone(), self.viewport.clone()) else {
            return;
        };
        let id = self.next_frame_id;
        let frame = match render(&chart, &vp, id) {
            Ok(f) => f,
            Err(e) => {
                self.emit(
                    t,
                    LogEvent::Notice {
                        text: format!("render failed: {e}"),
                    },
                );
                return;
            }
        };
        self.next_frame_id += 1;
        self.stop_playback(t);
        self.frame = frame;
        // Element ids are per frame; older selections no longer resolve.
        self.touch.retain_frame(id);
        self.cursor = None;
        self.push_frame(t);
        self.emit(
            t,
            LogEvent::Frame {
                frame_id: id,
                digest: self.frame.digest(),
                layer: self.frame.layer.map(|l| l.to_string()),
                elements: self.frame.elements.len(),
            },
        );
        self.publish(
            DEVICE_FRAME,
            json!({ "frame_id": id, "pins": hex::encode(pack_pins(self.frame.pins())) }),
            t,
        );
        self.braille_pages = self.frame.braille_pages.clone();
        self.braille_page = 0;
        self.show_braille_page(t);
    }

    /// Full frame the first time, then a partial update when it is smaller.
    fn push_frame(&mut self, t: u64) {
        let full = Packet::full_frame(&self.frame);
        let partial = Packet::partial_diff(self.device.pins(), self.frame.pins());
        let size = |p: &Packet| p.encode().map_or(usize::MAX, |b| b.len());
        let first = self.device.log.is_empty();
        let packet = if !first && size(&partial) < size(&full) {
            partial
        } else {
            full
        };
        self.send(t, &packet);
    }

    fn show_braille_page(&mut self, t: u64) {
        if let Some(line) = self.braille_pages.get(self.braille_page).cloned() {
            self.send(t, &Packet::BrailleLine(line.to_bytes()));
            self.emit(t, LogEvent::Braille { text: line.unicode() });
        }
    }

    fn show_braille(&mut self, t: u64, pages: Vec<BrailleLine>) {
        self.braille_pages = pages;
        self.braille_page = 0;
        self.show_braille_page(t);
    }

    /// Drop any running pulse: clear the display, then restore the frame
    /// and the Braille line.
    fn clear_highlight(&mut self, t: u64) {
        if self.highlight_until <= t {
            return;
        }
        self.highlight_until = t;
        self.send(t, &Packet::Clear);
        self.send(t, &Packet::full_frame(&self.frame));
        if let Some(line) = self.braille_pages.get(self.braille_page) {
            let bytes = line.to_bytes();
            self.send(t, &Packet::BrailleLine(bytes));
        }
    }

    fn pulse(&mut self, t: u64, cells: &[Cell], duration_ms: u64) {
        self.clear_highlight(t);
        if cells.is_empty() {
            return;
        }
        self.send(t, &pulse_packet(cells, DEFAULT_PULSE_HZ, duration_ms));
        self.highlight_until = t + duration_ms;
    }

    // ---- charts and viewport -------------------------------------------

    pub fn load(&mut self, name: &str, t: u64) {
        self.tick(t);
        match self.catalogue.load(name) {
            Ok(chart) => {
                let vp = ViewportState::initial(&chart, PLOT_WIDTH);
                self.chart_name = Some(chart.spec.name.clone());
                self.chart = Some(Arc::new(chart));
                self.viewport = Some(vp);
                self.touch.clear();
                self.agent.lock().unwrap_or_else(|e| e.into_inner()).reset();
                self.show(t);
            }
            Err(e) => self.emit(t, LogEvent::Notice { text: e.to_string() }),
        }
    }

    /// Replace the viewport windows of the loaded chart and re-render.
    pub fn set_viewport(&mut self, vp: ViewportState, t: u64) {
        self.tick(t);
        if self.chart.is_some() {
            self.viewport = Some(vp);
            self.show(t);
        }
    }

    fn operate(&mut self, op: Operation, t: u64) {
        let (Some(chart), Some(vp)) = (self.chart.clone(), self.viewport.clone()) else {
            self.emit(
                t,
                LogEvent::Notice {
                    text: "no chart loaded".into(),
                },
            );
            return;
        };
        let next = match op {
            Operation::Reset => Ok(ViewportState::initial(&chart, PLOT_WIDTH)),
            Operation::Pan { direction } => Ok(vp.pan(&chart, direction)),
            Operation::Zoom { mode } => vp.zoom(&chart, mode, PLOT_WIDTH),
        };
        match next {
            Ok(next) if next == vp => self.emit(
                t,
                LogEvent::Notice {
                    text: "viewport unchanged".into(),
                },
            ),
            Ok(next) => {
                self.viewport = Some(next);
                self.show(t);
            }
            Err(e) => self.speak(t, None, &format!("Cannot zoom: {e}.")),
        }
    }

    fn speak(&mut self, t: u64, chunk: Option<usize>, text: &str) {
        self.emit(
            t,
            LogEvent::Speech {
                chunk,
                text: text.to_string(),
            },
        );
    }

    // ---- touch ----------------------------------------------------------

    fn gesture(&mut self, g: GestureEvent) {
        if g.kind != GestureKind::DoubleTap {
            return;
        }
        let t = g.t;
        let Some(chart) = self.chart.clone() else {
            self.emit(
                t,
                LogEvent::Miss {
                    finger: g.finger,
                    x: g.position.0,
                    y: g.position.1,
                },
            );
            self.speak(t, None, MISS_TEXT);
            return;
        };
        let target = infer_target(g.position, &self.frame, self.cfg.sigma, self.cfg.radius);
        let element = target.and_then(|tg| self.frame.element(tg.element).cloned().map(|e| (e, tg.probability)));
        match element {
            Some((e, p)) if e.kind == ElementKind::Datum => {
                let Some(sel) = Selection::new(
                    &chart,
                    &e,
                    self.frame.frame_id,
                    g.finger,
                    p,
                    t,
                    self.cfg.selection_ttl_ms,
                ) else {
                    return;
                };
                self.emit(
                    t,
                    LogEvent::Selection {
                        finger: g.finger,
                        element: e.id,
                        label: e.label.clone(),
                        probability: (p * 1e6).round() / 1e6,
                    },
                );
                self.touch.cache(sel);
                let live = self.touch.live(t);
                let refs: Vec<&Selection> = live.selections().iter().collect();
                let fb = touch_response(&refs, &self.frame, t);
                self.stop_playback(t);
                if let Some(h) = &fb.highlight {
                    let ms = match h.persistence {
                        crate::output::Persistence::Timed(ms) => ms,
                        crate::output::Persistence::UntilDismissed => fb.speech.duration_ms,
                    };
                    self.emit(
                        t,
                        LogEvent::Highlight {
                            chunk: None,
                            cells: h.cells.len(),
                        },
                    );
                    let cells = h.cells.clone();
                    self.pulse(t, &cells, ms);
                }
                self.speak(t, None, &fb.speech.text);
                self.show_braille(t, fb.braille);
            }
            Some((e, _)) => {
                // Axis ticks and labels are read, not selected.
                self.speak(t, None, &format!("{}.", e.label));
                self.show_braille(t, paginate(&e.label));
            }
            None => {
                self.emit(
                    t,
                    LogEvent::Miss {
                        finger: g.finger,
                        x: g.position.0,
                        y: g.position.1,
                    },
                );
                self.speak(t, None, MISS_TEXT);
            }
        }
    }

    // ---- buttons --------------------------------------------------------

    fn button_action(&mut self, a: ButtonAction) {
        let t = a.t;
        self.emit(
            t,
            LogEvent::Action {
                press: a.press,
                action: a.action,
            },
        );
        let playing = self.playback.as_ref().is_some_and(|p| !p.finished());
        if let (true, Some(ctl)) = (playing, PlaybackControl::from_action(a.action)) {
            if let Some(p) = self.playback.as_mut() {
                p.controls.push((t, ctl));
            }
            self.flush_playback(t);
            return;
        }
        match a.action {
            Action::PageLeft | Action::PageRight => {
                let n = self.braille_pages.len();
                let next = if a.action == Action::PageRight {
                    (self.braille_page + 1).min(n.saturating_sub(1))
                } else {
                    self.braille_page.saturating_sub(1)
                };
                if n > 0 && next != self.braille_page {
                    self.braille_page = next;
                    self.show_braille_page(t);
                }
            }
            Action::NextPoint | Action::PreviousPoint => self.step_point(t, a.action == Action::NextPoint),
            Action::Repeat if !self.last_chunks.is_empty() => {
                let chunks = self.last_chunks.clone();
                self.start_playback(chunks, t);
            }
            Action::Refresh => {
                let full = Packet::full_frame(&self.frame);
                self.send(t, &full);
                self.show_braille_page(t);
            }
            Action::Pan(direction) => self.operate(Operation::Pan { direction }, t),
            Action::Zoom(mode) => self.operate(Operation::Zoom { mode }, t),
            Action::PushToTalk => self.emit(
                t,
                LogEvent::Notice {
                    text: "listening".into(),
                },
            ),
            _ => {}
        }
    }

    /// Move the point cursor through the frame's data in element order.
    fn step_point(&mut self, t: u64, forward: bool) {
        let data: Vec<_> = self.frame.data().cloned().collect();
        if data.is_empty() {
            self.speak(t, None, MISS_TEXT);
            return;
        }
        let i = match (self.cursor, forward) {
            (None, true) => 0,
            (None, false) => data.len() - 1,
            (Some(i), true) => (i + 1).min(data.len() - 1),
            (Some(i), false) => i.saturating_sub(1),
        };
        self.cursor = Some(i);
        let e = &data[i];
        let cells = crate::output::ring(e.grid_position, &e.footprint);
        self.stop_playback(t);
        self.emit(
            t,
            LogEvent::Highlight {
                chunk: None,
                cells: cells.len(),
            },
        );
        self.pulse(t, &cells, crate::output::TOUCH_HIGHLIGHT_MS);
        self.speak(t, None, &format!("{}.", e.label));
        self.show_braille(t, paginate(&e.label));
    }

    // ---- queries ----------------------------------------------------------

    /// Snapshot the session for a query. Any query still in flight is
    /// superseded: its response will be ignored.
    pub fn begin_query(&mut self, transcript: &str, t: u64) -> PendingQuery {
        self.advance(t);
        self.generation += 1;
        self.turn += 1;
        PendingQuery {
            generation: self.generation,
            query: AgentQuery {
                transcript: transcript.to_string(),
                touch: self.touch.live(t),
                chart: self.chart_name.clone(),
                dialogue_id: self.dialogue_id.clone(),
                turn: self.turn,
                t,
            },
            chart: self.chart.clone(),
            frame: self.frame.clone(),
            viewport: self.viewport.clone(),
            catalogue: self.catalogue.clone(),
        }
    }

    /// Apply a response. Returns false if a newer query superseded it.
    pub fn complete_query(&mut self, pending: &PendingQuery, resp: AgentResponse, t: u64) -> bool {
        if pending.generation != self.generation {
            log::info!("dropping superseded response to turn {}", resp.turn);
            return false;
        }
        self.advance(t);
        self.emit(
            t,
            LogEvent::Query {
                transcript: pending.query.transcript.clone(),
                augmented: resp.augmented.clone(),
                confidence: (resp.confidence * 1e6).round() / 1e6,
            },
        );
        if let Ok(v) = serde_json::to_value(&resp) {
            self.publish(AGENT_RESPONSE, v, t);
        }
        for c in &resp.commands {
            if let Ok(v) = serde_json::to_value(c) {
                self.publish(AGENT_COMMAND, v, t);
            }
            match c {
                AgentCommand::LoadChart { name } => self.load(name, t),
                AgentCommand::Viewport { operation } => self.operate(*operation, t),
                AgentCommand::Highlight { .. } => {}
            }
        }
        // Element references only hold for the frame the answer was made on.
        let refs = if self.frame.frame_id == pending.frame.frame_id {
            resp.referenced_elements.clone()
        } else {
            Vec::new()
        };
        let chunks = segment_response(&resp.text, &refs, &self.frame);
        self.emit(
            t,
            LogEvent::Response {
                intent: resp.intent.category().to_string(),
                text: resp.text.clone(),
                word_count: resp.word_count,
                chunks: chunks.len(),
                source: resp.source,
            },
        );
        self.start_playback(chunks, t);
        true
    }

    /// Run a query to completion on this thread.
    pub fn query(&mut self, transcript: &str, t: u64) -> AgentResponse {
        let pending = self.begin_query(transcript, t);
        let resp = {
            let mut agent = self.agent.lock().unwrap_or_else(|e| e.into_inner());
            pending.run(&mut agent)
        };
        self.complete_query(&pending, resp.clone(), t);
        resp
    }

    // ---- playback -----------------------------------------------------------

    fn start_playback(&mut self, chunks: Vec<ResponseChunk>, t: u64) {
        self.stop_playback(t);
        if chunks.is_empty() {
            return;
        }
        self.last_chunks = chunks.clone();
        self.playback = Some(Playback {
            chunks,
            start: t,
            controls: Vec::new(),
            emitted: 0,
        });
        self.flush_playback(t);
    }

    /// End the current playback at `t` as if stopped.
    fn stop_playback(&mut self, t: u64) {
        if let Some(p) = self.playback.as_mut() {
            if !p.finished() {
                p.controls.push((t, PlaybackControl::Stop));
            }
        }
        self.flush_playback(t);
        self.playback = None;
    }

    fn flush_playback(&mut self, now: u64) {
        let Some(p) = self.playback.as_ref() else { return };
        let events = p.events();
        let due: Vec<PlaybackEvent> = events
            .iter()
            .skip(p.emitted)
            .take_while(|e| e.t <= now)
            .cloned()
            .collect();
        let chunks = p.chunks.clone();
        if let Some(p) = self.playback.as_mut() {
            p.emitted += due.len();
        }
        for e in due {
            match e.kind {
                PlaybackKind::Highlight => {
                    let cells = e.cells.clone().unwrap_or_default();
                    let i = e.chunk.unwrap_or(0);
                    let ms = chunks
                        .get(i)
                        .map_or(0, |c| speech_duration(&c.text))
                        .max(pulse_period_ms());
                    self.emit(
                        e.t,
                        LogEvent::Highlight {
                            chunk: e.chunk,
                            cells: cells.len(),
                        },
                    );
                    self.pulse(e.t, &cells, ms);
                }
                PlaybackKind::Speech => {
                    let text = e.text.clone().unwrap_or_default();
                    self.speak(e.t, e.chunk, text.trim_end());
                    if let Some(label) = e
                        .chunk
                        .and_then(|i| chunks.get(i))
                        .and_then(|c| c.braille_label.clone())
                    {
                        self.show_braille(e.t, paginate(&label));
                    }
                }
                PlaybackKind::Clear => {
                    self.emit(e.t, LogEvent::Clear);
                    self.clear_highlight(e.t);
                }
            }
        }
    }

    /// Final digest line: the current frame and the display state.
    pub fn digest(&self) -> LogLine {
        LogLine {
            t: self.now,
            event: LogEvent::Digest {
                frame: self.frame.digest(),
                device: self.device.digest(),
            },
        }
    }
}

fn pulse_period_ms() -> u64 {
    (1000.0 / DEFAULT_PULSE_HZ) as u64
}

/// Result of replaying a recorded session.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub log: Vec<LogLine>,
    pub digest: LogLine,
    pub device: SimulatedDevice,
}

impl ReplayOutcome {
    /// The printed form: one JSON object per line, digest last.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in self.log.iter().chain(std::iter::once(&self.digest)) {
            s.push_str(&l.to_json_line());
            s.push('\n');
        }
        s
    }
}

/// Replay `events` on a fresh session with a deterministic agent. Time is
/// virtual: it comes from the events only.
pub fn replay(events: &[RecordedEvent], catalogue: Arc<ChartCatalogue>, cfg: InputConfig) -> ReplayOutcome {
    replay_with(events, catalogue, cfg, Agent::new())
}

pub fn replay_with(
    events: &[RecordedEvent],
    catalogue: Arc<ChartCatalogue>,
    cfg: InputConfig,
    agent: Agent,
) -> ReplayOutcome {
    let mut s = Session::new(catalogue, cfg, agent);
    for (t, p) in expand(events) {
        s.apply(t, p);
    }
    s.finish();
    let digest = s.digest();
    ReplayOutcome {
        log: s.drain_log(),
        digest,
        device: s.device,
    }
}

/// Compare a replay's text against an expected log, line by line. Returns
/// the first differing line (1-based) with both sides.
pub fn first_mismatch(actual: &str, expected: &str) -> Option<(usize, String, String)> {
    let a: Vec<&str> = actual.lines().filter(|l| !l.trim().is_empty()).collect();
    let e: Vec<&str> = expected.lines().filter(|l| !l.trim().is_empty()).collect();
    (0..a.len().max(e.len())).find_map(|i| {
        let (x, y) = (a.get(i).copied().unwrap_or(""), e.get(i).copied().unwrap_or(""));
        (x != y).then(|| (i + 1, x.to_string(), y.to_string()))
    })
}
