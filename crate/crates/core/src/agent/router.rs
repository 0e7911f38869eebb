//! Rule-based intent router. The tables here are mirrored in docs/router.md;
//! keep the two in sync.

use serde::{Deserialize, Serialize};

use super::calc::Task;
use crate::render::{PanDirection, ZoomMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    Pan { direction: PanDirection },
    Zoom { mode: ZoomMode },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "category")]
pub enum Intent {
    LoadChart { name: String },
    Overview,
    ImageAnalysis,
    Operations { operation: Operation },
    DataExplore { task: Option<Task>, clarify: bool },
}

impl Intent {
    pub fn category(&self) -> &'static str {
        match self {
            Intent::LoadChart { .. } => "LoadChart",
            Intent::Overview => "Overview",
            Intent::ImageAnalysis => "ImageAnalysis",
            Intent::Operations { .. } => "Operations",
            Intent::DataExplore { .. } => "DataExplore",
        }
    }

    /// Fallback for queries no rule recognises.
    pub fn unknown() -> Self {
        Intent::DataExplore {
            task: None,
            clarify: true,
        }
    }
}

/// What the router remembers between turns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub last_intent: Option<Intent>,
}

/// Leading filler dropped before matching.
pub const FILLERS: [&str; 8] = [
    "please",
    "can you",
    "could you",
    "would you",
    "i want to",
    "i'd like to",
    "let's",
    "now",
];

/// Verbs that start a chart load. "show" only counts when the sentence
/// also names a chart, graph or plot.
pub const LOAD_VERBS: [&str; 6] = ["load", "open", "switch to", "go to", "bring up", "show"];

pub const ZOOM_RULES: [(&str, ZoomMode); 10] = [
    ("semantic zoom in", ZoomMode::SemanticIn),
    ("semantic zoom out", ZoomMode::SemanticOut),
    ("more detail", ZoomMode::SemanticIn),
    ("drill down", ZoomMode::SemanticIn),
    ("finer", ZoomMode::SemanticIn),
    ("less detail", ZoomMode::SemanticOut),
    ("coarser", ZoomMode::SemanticOut),
    ("zoom in", ZoomMode::GeometricIn),
    ("zoom out", ZoomMode::GeometricOut),
    ("magnify", ZoomMode::GeometricIn),
];

pub const PAN_VERBS: [&str; 4] = ["pan", "scroll", "move", "shift"];

pub const PAN_DIRECTIONS: [(&str, PanDirection); 4] = [
    ("left", PanDirection::Left),
    ("right", PanDirection::Right),
    ("up", PanDirection::Up),
    ("down", PanDirection::Down),
];

pub const RESET_PHRASES: [&str; 4] = ["reset view", "reset zoom", "reset the view", "full view"];

pub const IMAGE_PHRASES: [&str; 6] = ["look like", "image", "picture", "visual", "visually", "appearance"];

pub const OVERVIEW_PHRASES: [&str; 9] = [
    "overview",
    "summarize",
    "summarise",
    "summary",
    "what is this chart",
    "what does this chart show",
    "what chart is this",
    "describe the chart",
    "about this chart",
];

/// Task keywords, tried in this order; the first task with a hit wins.
pub const TASK_RULES: [(Task, &[&str]); 9] = [
    (
        Task::ComparePoints,
        &[
            "compare",
            "comparison",
            "difference",
            "how much higher",
            "how much lower",
            "how much more",
            "how much less",
        ],
    ),
    (
        Task::Trend,
        &[
            "trend",
            "happened",
            "happen",
            "change",
            "changed",
            "evolve",
            "over time",
            "pattern",
            "going up",
            "going down",
        ],
    ),
    (
        Task::RangeDescribe,
        &["range", "describe", "spread", "distribution", "statistics", "stats"],
    ),
    (
        Task::Max,
        &["maximum", "max", "highest", "peak", "largest", "biggest", "most"],
    ),
    (Task::Min, &["minimum", "min", "lowest", "smallest", "least", "bottom"]),
    (Task::Mean, &["average", "mean", "typical"]),
    (Task::Sum, &["total", "sum", "altogether", "combined"]),
    (Task::Count, &["how many", "count", "number of"]),
    (
        Task::ValueAt,
        &[
            "value", "what is", "what was", "what's", "how high", "how low", "how much", "level",
        ],
    ),
];

pub const REPEAT_PHRASES: [&str; 3] = ["again", "repeat that", "same question"];

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn find(w: &[String], phrase: &str) -> Option<usize> {
    let p: Vec<&str> = phrase.split(' ').collect();
    (0..w.len()).find(|&i| i + p.len() <= w.len() && p.iter().zip(&w[i..]).all(|(a, b)| a == b))
}

fn has(w: &[String], phrase: &str) -> bool {
    find(w, phrase).is_some()
}

fn strip_fillers(mut w: &[String]) -> &[String] {
    'outer: loop {
        for f in FILLERS {
            let n = f.split(' ').count();
            if w.len() > n && f.split(' ').zip(w).all(|(a, b)| a == b) {
                w = &w[n..];
                continue 'outer;
            }
        }
        return w;
    }
}

fn load_target(w: &[String]) -> Option<String> {
    let w = strip_fillers(w);
    for verb in LOAD_VERBS {
        let n = verb.split(' ').count();
        if w.len() <= n || !verb.split(' ').zip(w).all(|(a, b)| a == b) {
            continue;
        }
        let mut rest: Vec<&str> = w[n..].iter().map(String::as_str).collect();
        let names_chart = rest.iter().any(|x| matches!(*x, "chart" | "graph" | "plot"));
        if verb == "show" && !names_chart {
            return None;
        }
        while rest.first().is_some_and(|x| matches!(*x, "the" | "a" | "me" | "up")) {
            rest.remove(0);
        }
        while rest
            .last()
            .is_some_and(|x| matches!(*x, "chart" | "graph" | "plot" | "data" | "please"))
        {
            rest.pop();
        }
        if rest.is_empty() {
            return None;
        }
        return Some(rest.join(" "));
    }
    None
}

/// Keep only the spoken part of an augmented transcript.
pub fn spoken_part(text: &str) -> &str {
    match text.find("(touched:") {
        Some(i) => text[..i].trim_end(),
        None => text,
    }
}

/// Classify a query. Rules run in a fixed order: load, operations, image
/// analysis, overview, analytic tasks, repeat; anything else is an
/// analytic query that needs clarification.
pub fn route_intent(text: &str, state: &DialogueState) -> Intent {
    let w = words(spoken_part(text));
    if let Some(name) = load_target(&w) {
        return Intent::LoadChart { name };
    }
    if RESET_PHRASES.iter().any(|p| has(&w, p)) {
        return Intent::Operations {
            operation: Operation::Reset,
        };
    }
    if let Some((_, mode)) = ZOOM_RULES.iter().find(|(p, _)| has(&w, p)) {
        return Intent::Operations {
            operation: Operation::Zoom { mode: *mode },
        };
    }
    if let Some(v) = PAN_VERBS.iter().filter_map(|v| find(&w, v)).min() {
        if let Some((_, direction)) = PAN_DIRECTIONS.iter().find(|(d, _)| w[v + 1..].iter().any(|x| x == d)) {
            return Intent::Operations {
                operation: Operation::Pan { direction: *direction },
            };
        }
    }
    if IMAGE_PHRASES.iter().any(|p| has(&w, p)) {
        return Intent::ImageAnalysis;
    }
    if OVERVIEW_PHRASES.iter().any(|p| has(&w, p)) {
        return Intent::Overview;
    }
    if let Some((task, _)) = TASK_RULES.iter().find(|(_, kws)| kws.iter().any(|k| has(&w, k))) {
        return Intent::DataExplore {
            task: Some(*task),
            clarify: false,
        };
    }
    if REPEAT_PHRASES.iter().any(|p| has(&w, p)) {
        if let Some(last) = &state.last_intent {
            return last.clone();
        }
    }
    Intent::unknown()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Intent {
        route_intent(s, &DialogueState::default())
    }

    fn task(s: &str) -> Option<Task> {
        match r(s) {
            Intent::DataExplore { task, .. } => task,
            other => panic!("{s:?} routed to {other:?}"),
        }
    }

    #[test]
    fn load_chart() {
        assert_eq!(
            r("load the interest rates chart"),
            Intent::LoadChart {
                name: "interest rates".into()
            }
        );
        assert_eq!(
            r("Please open daily visits."),
            Intent::LoadChart {
                name: "daily visits".into()
            }
        );
        assert_eq!(task("show me the highest value"), Some(Task::Max));
    }

    #[test]
    fn operations() {
        assert_eq!(
            r("zoom in"),
            Intent::Operations {
                operation: Operation::Zoom {
                    mode: ZoomMode::GeometricIn
                }
            }
        );
        assert_eq!(
            r("Can you pan to the right?"),
            Intent::Operations {
                operation: Operation::Pan {
                    direction: PanDirection::Right
                }
            }
        );
        assert_eq!(
            r("show more detail"),
            Intent::Operations {
                operation: Operation::Zoom {
                    mode: ZoomMode::SemanticIn
                }
            }
        );
    }

    #[test]
    fn overview_and_image() {
        assert_eq!(r("give me an overview"), Intent::Overview);
        assert_eq!(r("What does the chart look like?"), Intent::ImageAnalysis);
    }

    #[test]
    fn tasks() {
        assert_eq!(
            task("What was the trend of the interest rate data during this period?"),
            Some(Task::Trend)
        );
        assert_eq!(task("What is the maximum interest rate?"), Some(Task::Max));
        assert_eq!(task("how much higher is this one"), Some(Task::ComparePoints));
        assert_eq!(task("How many quarters are there?"), Some(Task::Count));
        assert_eq!(task("what's the value here"), Some(Task::ValueAt));
        assert_eq!(task("what happened here?"), Some(Task::Trend));
    }

    #[test]
    fn suffix_is_ignored() {
        let t = "Compare these (touched: point_A {quarter=2020-Q2, interest=0.25%})";
        assert_eq!(task(t), Some(Task::ComparePoints));
    }

    #[test]
    fn unknown_needs_clarification() {
        assert_eq!(r("banana"), Intent::unknown());
        let state = DialogueState {
            last_intent: Some(Intent::Overview),
        };
        assert_eq!(route_intent("again", &state), Intent::Overview);
    }
}
