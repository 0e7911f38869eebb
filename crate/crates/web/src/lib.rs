//! Browser demo: render a fixture chart, pan and zoom it, tap pins to
//! select data with adjustable target spread, and ask deictic questions.
//! Every method returns a JSON string so the page needs no bindings beyond
//! wasm-bindgen's own.

use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

use feelgrid::agent::{Agent, AgentEnv, AgentQuery};
use feelgrid::chart::{parse_spec, table::parse_csv, LoadedChart};
use feelgrid::input::{score_candidates, Finger, InputConfig, Selection, TouchContext};
use feelgrid::output::touch_response;
use feelgrid::render::{render, PanDirection, TactileFrame, ViewportState, ZoomMode, PLOT_WIDTH};

const FIXTURES: [(&str, &str, &str); 2] = [
    (
        "interest_rates",
        include_str!("../../../data/catalogue/interest_rates.vl.json"),
        include_str!("../../../data/catalogue/interest_rates.csv"),
    ),
    (
        "daily_visits",
        include_str!("../../../data/catalogue/daily_visits.vl.json"),
        include_str!("../../../data/catalogue/daily_visits.csv"),
    ),
];

fn load_fixture(name: &str) -> Result<LoadedChart, String> {
    let (_, spec, csv) = FIXTURES
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| format!("unknown chart {name:?}"))?;
    let spec = parse_spec(spec.as_bytes()).map_err(|e| e.to_string())?;
    let table = parse_csv(csv, &spec.type_hints()).map_err(|e| e.to_string())?;
    LoadedChart::from_table(spec, table).map_err(|e| e.to_string())
}

/// Names of the built-in charts, as a JSON array.
#[wasm_bindgen]
pub fn chart_names() -> String {
    Json::from(FIXTURES.iter().map(|f| f.0).collect::<Vec<_>>()).to_string()
}

#[wasm_bindgen]
pub struct Demo {
    chart: LoadedChart,
    viewport: ViewportState,
    frame: TactileFrame,
    touch: TouchContext,
    agent: Agent,
    cfg: InputConfig,
    /// Virtual clock in ms; each interaction advances it.
    now: u64,
    turn: u64,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(chart: &str) -> Result<Demo, String> {
        let chart = load_fixture(chart)?;
        let viewport = ViewportState::initial(&chart, PLOT_WIDTH);
        let frame = render(&chart, &viewport, 1).map_err(|e| e.to_string())?;
        Ok(Demo {
            chart,
            viewport,
            frame,
            touch: TouchContext::default(),
            agent: Agent::new(),
            cfg: InputConfig::default(),
            now: 0,
            turn: 0,
        })
    }

    /// Current frame: `{frame_id, grid, layer, magnification, elements}`.
    pub fn frame(&self) -> String {
        let elements: Vec<Json> = self
            .frame
            .elements
            .iter()
            .map(|e| json!({ "id": e.id, "col": e.grid_position.col, "row": e.grid_position.row, "label": e.label }))
            .collect();
        json!({
            "frame_id": self.frame.frame_id,
            "grid": self.frame.grid_text(),
            "layer": self.frame.layer.map(|l| l.to_string()),
            "magnification": self.viewport.magnification,
            "braille": self.frame.braille_pages.first().map(|p| p.unicode()),
            "elements": elements,
            "selected": self.touch.selections().iter().map(|s| s.element).collect::<Vec<_>>(),
        })
        .to_string()
    }

    /// Pan ("left", "right", "up", "down") or zoom ("geometric_in",
    /// "geometric_out", "semantic_in", "semantic_out"), then re-render.
    pub fn view(&mut self, op: &str) -> String {
        let quoted = Json::from(op);
        let next = if let Ok(dir) = serde_json::from_value::<PanDirection>(quoted.clone()) {
            Ok(self.viewport.pan(&self.chart, dir))
        } else if let Ok(mode) = serde_json::from_value::<ZoomMode>(quoted) {
            self.viewport
                .zoom(&self.chart, mode, PLOT_WIDTH)
                .map_err(|e| e.to_string())
        } else {
            Err(format!("unknown operation {op:?}"))
        };
        match next {
            Ok(vp) => {
                self.viewport = vp;
                match render(&self.chart, &self.viewport, self.frame.frame_id + 1) {
                    Ok(f) => {
                        self.frame = f;
                        self.touch.clear();
                        self.frame()
                    }
                    Err(e) => json!({ "error": e.to_string() }).to_string(),
                }
            }
            Err(e) => json!({ "error": e }).to_string(),
        }
    }

    /// Double-tap at continuous pin coordinates with Gaussian spread
    /// `sigma`. Returns the scored candidates and the spoken feedback.
    pub fn tap(&mut self, x: f64, y: f64, sigma: f64, right_hand: bool) -> String {
        self.now += 1000;
        let finger = if right_hand {
            Finger::RightIndex
        } else {
            Finger::LeftIndex
        };
        let sigma = if sigma.is_finite() && sigma > 0.0 {
            sigma
        } else {
            self.cfg.sigma
        };
        let cands = score_candidates((x, y), &self.frame, sigma, self.cfg.radius);
        let scored: Vec<Json> = cands
            .iter()
            .map(|c| json!({ "id": c.element, "distance": c.distance, "probability": c.probability }))
            .collect();
        let chosen = cands
            .first()
            .and_then(|c| self.frame.element(c.element).map(|e| (e.clone(), c.probability)));
        if let Some((e, p)) = &chosen {
            if let Some(sel) = Selection::new(
                &self.chart,
                e,
                self.frame.frame_id,
                finger,
                *p,
                self.now,
                self.cfg.selection_ttl_ms,
            ) {
                self.touch.cache(sel);
            }
        }
        let live = self.touch.live(self.now);
        let refs: Vec<&Selection> = live.selections().iter().collect();
        let hit = chosen.as_ref().is_some_and(|(e, _)| e.datum.is_some());
        let fb = touch_response(if hit { &refs } else { &[] }, &self.frame, self.now);
        json!({
            "candidates": scored,
            "chosen": chosen.map(|(e, _)| e.id),
            "speech": fb.speech.text,
            "highlight": fb.highlight.map(|h| h.cells).unwrap_or_default(),
            "selected": live.selections().iter().map(|s| s.element).collect::<Vec<_>>(),
        })
        .to_string()
    }

    /// Ask a question; touched points ground "this", "these", "here".
    pub fn ask(&mut self, transcript: &str) -> String {
        self.now += 1000;
        self.turn += 1;
        let q = AgentQuery {
            transcript: transcript.to_string(),
            touch: self.touch.live(self.now),
            chart: Some(self.chart.spec.name.clone()),
            dialogue_id: "web".into(),
            turn: self.turn,
            t: self.now,
        };
        let env = AgentEnv {
            chart: Some(&self.chart),
            frame: Some(&self.frame),
            viewport: Some(&self.viewport),
            catalogue: None,
        };
        let r = self.agent.respond(&q, &env);
        json!({
            "augmented": r.augmented,
            "confidence": r.confidence,
            "intent": r.intent.category(),
            "text": r.text,
            "word_count": r.word_count,
            "referenced": r.referenced_elements,
            "clarification": r.clarification,
        })
        .to_string()
    }

    pub fn clear_touches(&mut self) {
        self.touch.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Json {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn fixtures_load() {
        for (name, _, _) in FIXTURES {
            assert!(Demo::new(name).is_ok(), "{name}");
        }
        assert!(Demo::new("nope").is_err());
        assert_eq!(parse(&chart_names()).as_array().unwrap().len(), 2);
    }

    #[test]
    fn tap_two_points_then_ask() {
        let mut d = Demo::new("interest_rates").unwrap();
        let a = parse(&d.tap(6.5, 32.5, 1.0, false));
        assert!(a["speech"].as_str().unwrap().contains("0.25%"));
        let b = parse(&d.tap(59.5, 0.5, 1.0, true));
        assert!(b["speech"].as_str().unwrap().contains("3.85%"));
        let r = parse(&d.ask("What was the trend of the interest rate data during this period?"));
        assert!(r["augmented"]
            .as_str()
            .unwrap()
            .contains("point_B {quarter=2023-Q2, interest=3.85%}"));
        assert!(r["text"].as_str().unwrap().starts_with("From Q2 2020 to Q2 2023"));
    }

    #[test]
    fn narrow_sigma_is_sharper() {
        let mut d = Demo::new("interest_rates").unwrap();
        let wide = parse(&d.tap(12.5, 33.5, 2.0, false));
        let sharp = parse(&d.tap(12.5, 33.5, 0.3, false));
        let top = |v: &Json| v["candidates"][0]["probability"].as_f64().unwrap();
        assert!(top(&sharp) > top(&wide));
    }

    #[test]
    fn zoom_and_pan() {
        let mut d = Demo::new("daily_visits").unwrap();
        let f = parse(&d.view("geometric_in"));
        assert_eq!(f["magnification"], 2.0);
        assert!(parse(&d.view("left"))["grid"].is_string());
        assert!(parse(&d.view("sideways"))["error"].is_string());
    }
}
