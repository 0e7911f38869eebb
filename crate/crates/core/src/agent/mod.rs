//! Query interpretation: deictic fusion, intent routing, calculation and
//! constrained answers with per-sentence element references.

pub mod calc;
pub mod deictic;
pub mod port;
pub mod respond;
pub mod router;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use calc::{calculate, AnalyticResult, CalcError, Direction, Point, Scope, Segment, Task};
pub use deictic::{classify_deictic, Deixis, FUSION_THRESHOLD};
pub use port::{CitedValue, ModelPort, PortError, PortReply, PortRequest, ScriptedPort};
pub use respond::{word_count, Answer, Referent, MAX_WORDS};
pub use router::{route_intent, DialogueState, Intent, Operation};

use crate::chart::{ChartCatalogue, LoadedChart, Value};
use crate::input::TouchContext;
use crate::render::{ElementId, TactileFrame, ViewportState, ZoomMode, PLOT_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentQuery {
    pub transcript: String,
    pub touch: TouchContext,
    /// Name of the loaded chart, if any.
    pub chart: Option<String>,
    pub dialogue_id: String,
    pub turn: u64,
    /// Session time the query was issued, ms.
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum AgentCommand {
    LoadChart { name: String },
    Viewport { operation: Operation },
    Highlight { elements: Vec<ElementId> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerSource {
    Planner,
    Port,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub dialogue_id: String,
    pub turn: u64,
    pub augmented: String,
    pub intent: Intent,
    pub text: String,
    /// Elements each sentence refers to, by sentence index.
    pub referenced_elements: Vec<Vec<ElementId>>,
    /// Referenced data outside the current viewport, as x labels.
    pub offscreen: Vec<String>,
    pub commands: Vec<AgentCommand>,
    /// Deictic confidence of the query.
    pub confidence: f64,
    pub word_count: usize,
    pub clarification: bool,
    /// True for DataExplore answers, which carry the word limit.
    pub data_answer: bool,
    pub source: AnswerSource,
    /// Port claims that failed verification.
    pub discrepancies: Vec<String>,
}

/// What the agent can see of the session.
#[derive(Debug, Clone, Copy)]
pub struct AgentEnv<'a> {
    pub chart: Option<&'a LoadedChart>,
    pub frame: Option<&'a TactileFrame>,
    pub viewport: Option<&'a ViewportState>,
    pub catalogue: Option<&'a ChartCatalogue>,
}

/// One dialogue. Without a port the response is a pure function of the
/// query, the environment and the previous turn's referenced points.
pub struct Agent {
    pub dialogue: DialogueState,
    /// Points the previous data answer referred to ("those points").
    last_points: Vec<(Value, Option<String>)>,
    port: Option<Box<dyn ModelPort>>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("dialogue", &self.dialogue)
            .field("last_points", &self.last_points)
            .field("port", &self.port.is_some())
            .finish()
    }
}

impl Default for Agent {
    fn default() -> Self {
        Self::new()
    }
}

fn has_word(text: &str, words: &[&str]) -> bool {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .any(|w| words.contains(&w))
}

struct Draft {
    answer: Answer,
    commands: Vec<AgentCommand>,
    clarification: bool,
    data_answer: bool,
    /// Inputs for verifying port claims.
    scope: Option<Scope>,
}

impl Draft {
    fn plain(text: impl Into<String>) -> Self {
        Self {
            answer: Answer::plain(text),
            commands: Vec::new(),
            clarification: false,
            data_answer: false,
            scope: None,
        }
    }

    fn clarify(text: &str) -> Self {
        Self {
            clarification: true,
            ..Self::plain(text)
        }
    }
}

impl Agent {
    pub fn new() -> Self {
        Self {
            dialogue: DialogueState::default(),
            last_points: Vec::new(),
            port: None,
        }
    }

    pub fn with_port(port: Box<dyn ModelPort>) -> Self {
        Self {
            port: Some(port),
            ..Self::new()
        }
    }

    /// Agent with the HTTP port when `FEELGRID_MODEL_URL` is set.
    #[cfg(feature = "http-port")]
    pub fn from_env() -> Self {
        match port::HttpModelPort::from_env() {
            Some(p) => {
                log::info!("model port enabled at {}", p.url);
                Self::with_port(Box::new(p))
            }
            None => Self::new(),
        }
    }

    pub fn has_port(&self) -> bool {
        self.port.is_some()
    }

    /// Forget "those points" and the last intent.
    pub fn reset(&mut self) {
        self.dialogue = DialogueState::default();
        self.last_points.clear();
    }

    pub fn respond(&mut self, q: &AgentQuery, env: &AgentEnv) -> AgentResponse {
        let deixis = classify_deictic(&q.transcript, &q.touch, q.t);
        let mut intent = route_intent(&deixis.augmented, &self.dialogue);
        let mut discrepancies = Vec::new();

        let reply = self
            .port
            .as_ref()
            .and_then(|p| match p.ask(&port_request(q, &deixis, env)) {
                Ok(r) => Some(r),
                Err(e) => {
                    log::warn!("model port: {e}; answering deterministically");
                    None
                }
            });
        if let Some(pi) = reply.as_ref().and_then(|r| r.intent.as_ref()) {
            match pi.to_intent() {
                Ok(i) => intent = i,
                Err(e) => log::warn!("model port: {e}; keeping routed intent"),
            }
        }

        let draft = self.draft(&intent, &deixis, q, env);
        let mut answer = draft.answer;
        let mut source = AnswerSource::Planner;
        if let (Some(reply), Some(chart), Some(scope)) = (&reply, env.chart, &draft.scope) {
            if let Some(text) = &reply.answer {
                discrepancies = verify(chart, env.frame, scope, &reply.cited_values);
                for d in &discrepancies {
                    log::warn!("model port discrepancy: {d}");
                }
                if discrepancies.is_empty() && !reply.cited_values.is_empty() && word_count(text) <= MAX_WORDS {
                    let refs: Vec<Point> = answer.sentences.concat();
                    let n = crate::output::sentence_spans(text).len().max(1);
                    answer = Answer {
                        text: text.clone(),
                        sentences: vec![refs; n],
                    };
                    source = AnswerSource::Port;
                } else if discrepancies.is_empty() {
                    discrepancies.push("answer cites no verifiable values".into());
                }
            }
        }

        let (referenced, offscreen) = locate(env, &answer.sentences);
        let mut commands = draft.commands;
        let all: Vec<ElementId> = referenced.iter().flatten().copied().collect();
        if !all.is_empty() {
            commands.push(AgentCommand::Highlight { elements: all });
        }
        if draft.data_answer {
            self.last_points = answer
                .sentences
                .iter()
                .flatten()
                .map(|p| (p.x.clone(), p.series.clone()))
                .collect();
        }
        if !draft.clarification {
            self.dialogue.last_intent = Some(intent.clone());
        }
        AgentResponse {
            dialogue_id: q.dialogue_id.clone(),
            turn: q.turn,
            augmented: deixis.augmented.clone(),
            intent,
            word_count: word_count(&answer.text),
            text: answer.text,
            referenced_elements: referenced,
            offscreen,
            commands,
            confidence: deixis.confidence,
            clarification: draft.clarification,
            data_answer: draft.data_answer,
            source,
            discrepancies,
        }
    }

    fn draft(&self, intent: &Intent, deixis: &Deixis, q: &AgentQuery, env: &AgentEnv) -> Draft {
        match intent {
            Intent::LoadChart { name } => load_chart(name, env.catalogue),
            Intent::Overview => match env.chart {
                Some(c) => Draft::plain(respond::overview(c, c.table_for(env.frame.and_then(|f| f.layer))).text),
                None => Draft::plain(respond::NO_CHART),
            },
            Intent::ImageAnalysis => image_analysis(env),
            Intent::Operations { operation } => operation_draft(*operation, env),
            Intent::DataExplore { task: None, .. } => Draft::clarify(respond::CLARIFY_UNKNOWN),
            Intent::DataExplore { task: Some(task), .. } => self.data_draft(*task, deixis, q, env),
        }
    }

    fn data_draft(&self, task: Task, deixis: &Deixis, q: &AgentQuery, env: &AgentEnv) -> Draft {
        let Some(chart) = env.chart else {
            return Draft::plain(respond::NO_CHART);
        };
        if deixis.needs_clarification && !self.refers_back(&q.transcript) {
            return Draft::clarify(respond::CLARIFY_TOUCH);
        }
        let (refs, referent) = if deixis.fused {
            let live = q.touch.live(q.t);
            let refs: Vec<(Value, Option<String>)> = live
                .selections()
                .iter()
                .map(|s| (s.datum.x.clone(), s.datum.series.clone()))
                .collect();
            let n = refs.len();
            (refs, Referent::Touched(n))
        } else if self.refers_back(&q.transcript) {
            (self.last_points.clone(), Referent::Earlier(self.last_points.len()))
        } else {
            (Vec::new(), Referent::Whole)
        };

        let mut scope = Scope {
            points: refs.iter().map(|r| r.0.clone()).collect(),
            ..Scope::default()
        };
        if refs.len() >= 2 {
            let lo = refs.iter().map(|r| &r.0).min_by(|a, b| a.total_cmp(b)).cloned();
            let hi = refs.iter().map(|r| &r.0).max_by(|a, b| a.total_cmp(b)).cloned();
            scope.range = lo.zip(hi);
        }
        let series: Vec<&Option<String>> = refs.iter().map(|r| &r.1).collect();
        if let Some(Some(s)) = series.first() {
            if series.iter().all(|x| x.as_deref() == Some(s.as_str())) {
                scope.series = Some(s.clone());
            }
        }
        if task.points_needed() > refs.len() {
            let text = if task == Task::ComparePoints {
                respond::CLARIFY_COMPARE
            } else {
                respond::CLARIFY_POINT
            };
            return Draft::clarify(text);
        }
        if task == Task::ValueAt && refs.len() > 1 {
            // Several referents: describe them instead of picking one.
            return self.data_draft_with(chart, env, Task::RangeDescribe, scope, referent);
        }
        if task == Task::Trend && chart.spec.series.is_some() && scope.series.is_none() {
            return Draft::clarify(respond::CLARIFY_SERIES);
        }
        self.data_draft_with(chart, env, task, scope, referent)
    }

    fn data_draft_with(
        &self,
        chart: &LoadedChart,
        env: &AgentEnv,
        task: Task,
        scope: Scope,
        referent: Referent,
    ) -> Draft {
        let table = chart.table_for(env.frame.and_then(|f| f.layer));
        let sf = chart.spec.series.as_ref().map(|s| s.field.as_str());
        let (xf, yf) = (&chart.spec.x.field, &chart.spec.y.field);
        let result = calculate(task, table, xf, yf, sf, &scope);
        let answer = match &result {
            Ok(r) => {
                let pts = calc::scoped_points(table, xf, yf, sf, &scope).unwrap_or_default();
                let span = pts.first().zip(pts.last()).map(|(a, b)| (&a.x, &b.x));
                respond::data_answer(chart, r, referent, span, scope.series.as_deref())
            }
            Err(e) => respond::error_answer(chart, e, referent),
        };
        Draft {
            answer,
            commands: Vec::new(),
            clarification: matches!(result, Err(CalcError::MissingPoints { .. })),
            data_answer: result.is_ok(),
            scope: Some(scope),
        }
    }

    fn refers_back(&self, transcript: &str) -> bool {
        !self.last_points.is_empty() && has_word(transcript, &["those", "them"])
    }
}

/// Map referenced points to element ids of the current frame.
fn locate(env: &AgentEnv, sentences: &[Vec<Point>]) -> (Vec<Vec<ElementId>>, Vec<String>) {
    let mut offscreen = Vec::new();
    let ids = sentences
        .iter()
        .map(|refs| {
            let mut ids = Vec::new();
            for p in refs {
                let hit = env.frame.and_then(|f| {
                    f.data().find(|e| {
                        e.datum
                            .as_ref()
                            .is_some_and(|d| d.x.total_cmp(&p.x) == Ordering::Equal && d.series == p.series)
                    })
                });
                match hit {
                    Some(e) if !ids.contains(&e.id) => ids.push(e.id),
                    Some(_) => {}
                    None => {
                        let label = env.chart.map_or_else(|| p.x.label(2), |c| respond::x_text(c, &p.x));
                        if !offscreen.contains(&label) {
                            offscreen.push(label);
                        }
                    }
                }
            }
            ids
        })
        .collect();
    (ids, offscreen)
}

/// Check each cited value against the planner. Values match when they
/// agree to the chart's display precision.
fn verify(chart: &LoadedChart, frame: Option<&TactileFrame>, scope: &Scope, cited: &[CitedValue]) -> Vec<String> {
    let table = chart.table_for(frame.and_then(|f| f.layer));
    let sf = chart.spec.series.as_ref().map(|s| s.field.as_str());
    let tol = 0.5 * 10f64.powi(-(chart.y_decimals() as i32)) + 1e-9;
    cited
        .iter()
        .filter_map(|c| {
            let Some(task) = Task::parse(&c.task) else {
                return Some(format!("cited unknown task {:?}", c.task));
            };
            let found = calculate(task, table, &chart.spec.x.field, &chart.spec.y.field, sf, scope)
                .ok()
                .and_then(|r| r.headline());
            match found {
                Some(v) if (v - c.value).abs() <= tol => None,
                Some(v) => Some(format!("cited {}={} but the planner found {}", c.task, c.value, v)),
                None => Some(format!(
                    "cited {}={} which the planner cannot reproduce",
                    c.task, c.value
                )),
            }
        })
        .collect()
}

fn port_request(q: &AgentQuery, deixis: &Deixis, env: &AgentEnv) -> PortRequest {
    PortRequest {
        version: 1,
        transcript: q.transcript.clone(),
        augmented: deixis.augmented.clone(),
        chart: q.chart.clone(),
        schema: env
            .chart
            .map(|c| {
                c.table
                    .columns()
                    .iter()
                    .map(|col| port::PortColumn {
                        name: col.name.clone(),
                        ty: col.ty.as_str().to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default(),
        selections: q
            .touch
            .live(q.t)
            .selections()
            .iter()
            .enumerate()
            .map(|(i, s)| port::PortSelection {
                name: deictic::point_name(i),
                fields: s.fields.iter().cloned().collect(),
            })
            .collect(),
        catalogue: env
            .catalogue
            .map(|cat| {
                cat.entries
                    .iter()
                    .map(|e| port::PortChart {
                        name: e.name.clone(),
                        title: e.title.clone(),
                        mark: e.mark.as_str().to_string(),
                        row_count: e.row_count,
                    })
                    .collect()
            })
            .unwrap_or_default(),
    }
}

fn load_chart(name: &str, catalogue: Option<&ChartCatalogue>) -> Draft {
    let Some(cat) = catalogue else {
        return Draft::plain("No chart catalogue is available.");
    };
    match cat.find(name) {
        Some(e) => {
            let title = e.title.clone().unwrap_or_else(|| e.name.replace('_', " "));
            Draft {
                commands: vec![AgentCommand::LoadChart { name: e.name.clone() }],
                ..Draft::plain(format!(
                    "Loaded {title}, a {} with {} rows of data.",
                    e.mark.noun(),
                    e.row_count
                ))
            }
        }
        None => Draft::clarify(&format!(
            "There is no chart called {name}. Available charts: {}.",
            respond::join_and(&cat.names().iter().map(|n| n.replace('_', " ")).collect::<Vec<_>>())
        )),
    }
}

fn image_analysis(env: &AgentEnv) -> Draft {
    let Some(chart) = env.chart else {
        return Draft::plain(respond::NO_CHART);
    };
    let cols: Vec<String> = chart
        .table
        .columns()
        .iter()
        .map(|c| format!("{} ({})", c.name.replace('_', " "), c.ty.as_str()))
        .collect();
    let rows = env
        .catalogue
        .and_then(|cat| cat.entries.iter().find(|e| e.name == chart.spec.name))
        .map_or(chart.table.row_count(), |e| e.row_count);
    Draft::plain(format!(
        "Image analysis is not available here. From the catalogue, this is a {} with columns {} and {rows} rows.",
        chart.spec.mark.noun(),
        respond::join_and(&cols)
    ))
}

fn operation_draft(op: Operation, env: &AgentEnv) -> Draft {
    let (Some(chart), Some(vp)) = (env.chart, env.viewport) else {
        return Draft::plain(respond::NO_CHART);
    };
    let ok = |text: String| Draft {
        commands: vec![AgentCommand::Viewport { operation: op }],
        ..Draft::plain(text)
    };
    match op {
        Operation::Reset => ok("Showing the whole chart.".into()),
        Operation::Pan { direction } => {
            if vp.pan(chart, direction) == *vp {
                Draft::plain(format!("Cannot pan {}; already at the edge.", dir_word(direction)))
            } else {
                ok(format!("Panned {}.", dir_word(direction)))
            }
        }
        Operation::Zoom { mode } => match vp.zoom(chart, mode, PLOT_WIDTH) {
            Ok(next) => ok(match (mode, next.active_layer) {
                (ZoomMode::SemanticIn | ZoomMode::SemanticOut, Some(l)) => format!("Now showing data by {}.", l.0),
                (ZoomMode::GeometricIn, _) => format!("Zoomed in to {}x.", next.magnification),
                (ZoomMode::GeometricOut, _) => format!("Zoomed out to {}x.", next.magnification),
                _ => "Zoom changed.".into(),
            }),
            Err(e) => Draft::plain(format!("Cannot zoom: {e}.")),
        },
    }
}

fn dir_word(d: crate::render::PanDirection) -> &'static str {
    use crate::render::PanDirection::*;
    match d {
        Left => "left",
        Right => "right",
        Up => "up",
        Down => "down",
    }
}
