//! Template answers. Every data answer opens with its context (the x span
//! and what was touched), carries units, names every tied extreme, and
//! says "approximately" only when a printed number was rounded.

use crate::chart::value::format_number;
use crate::chart::{LoadedChart, Value};

use super::calc::{AnalyticResult, CalcError, Direction, Point, Segment};

pub const MAX_WORDS: usize = 40;

/// What the question was anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Referent {
    Whole,
    Touched(usize),
    /// Points named in the previous answer.
    Earlier(usize),
}

/// A generated answer: sentences with the points each refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub text: String,
    pub sentences: Vec<Vec<Point>>,
}

impl Answer {
    fn one(text: String, refs: Vec<Point>) -> Self {
        Self {
            text,
            sentences: vec![refs],
        }
    }

    pub fn plain(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            sentences: Vec::new(),
        }
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Compact x text: "Q2 2020" for quarters, the label otherwise.
pub fn x_text(chart: &LoadedChart, v: &Value) -> String {
    match v {
        Value::Time(t) => t.short(),
        Value::Number(n) => {
            let d = chart
                .spec
                .x
                .decimals
                .or_else(|| chart.table.column(&chart.spec.x.field).map(|c| c.decimals))
                .unwrap_or(0);
            crate::chart::format_with_unit(&format_number(*n, d), chart.spec.x.unit.as_deref())
        }
        other => other.label(0),
    }
}

/// Whether printing `v` with `decimals` places loses information.
pub fn is_rounded(v: f64, decimals: usize) -> bool {
    let printed: f64 = format_number(v, decimals).parse().unwrap_or(f64::NAN);
    (printed - v).abs() > 1e-9 * v.abs().max(1.0)
}

/// A y value with unit, prefixed by "approximately" when rounded.
pub fn y_text(chart: &LoadedChart, v: f64) -> String {
    let s = chart.format_y(v);
    if is_rounded(v, chart.y_decimals()) {
        format!("approximately {s}")
    } else {
        s
    }
}

/// A y difference: percentages differ in percentage points.
pub fn diff_text(chart: &LoadedChart, d: f64) -> String {
    let dec = chart.y_decimals();
    let n = format_number(d.abs(), dec);
    let body = match chart.spec.y.unit.as_deref() {
        Some("%") => format!("{n} percentage points"),
        u => crate::chart::format_with_unit(&n, u),
    };
    if is_rounded(d.abs(), dec) {
        format!("approximately {body}")
    } else {
        body
    }
}

/// "a", "a and b", "a, b and c"
pub fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

fn measure(chart: &LoadedChart, series: Option<&str>) -> String {
    let noun = chart.spec.y.noun();
    match series {
        Some(s) => format!("{noun} for {s}"),
        None => noun,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Opening context for range answers.
fn prefix(chart: &LoadedChart, referent: Referent, span: Option<(&Value, &Value)>) -> String {
    let range = span.map(|(a, b)| (x_text(chart, a), x_text(chart, b)));
    match (referent, range) {
        (Referent::Touched(_), Some((a, b))) => format!("From {a} to {b}, between the touched data points, "),
        (Referent::Earlier(_), Some((a, b))) => format!("From {a} to {b}, across the points I just mentioned, "),
        (Referent::Whole, Some((a, b))) => format!("Across the whole chart, from {a} to {b}, "),
        (_, None) => "Across the whole chart, ".into(),
    }
}

fn point_source(referent: Referent, n: usize) -> &'static str {
    match (referent, n) {
        (Referent::Earlier(_), _) => "the point I just mentioned",
        (_, 1) => "the touched data point",
        _ => "the touched data points",
    }
}

fn grain_plural(p: &Point) -> &'static str {
    match &p.x {
        Value::Time(t) => t.grain.plural(),
        _ => "points",
    }
}

fn verb(dir: Direction) -> &'static str {
    match dir {
        Direction::Decline => "declined",
        Direction::Rise => "rose",
        Direction::Plateau => "held",
    }
}

fn segment_phrase(chart: &LoadedChart, s: &Segment, first: bool) -> String {
    match s.direction {
        Direction::Plateau => format!(
            "held at {} for {} {}",
            y_text(chart, s.start.y),
            s.steps + 1,
            grain_plural(&s.start)
        ),
        dir => {
            let steady = if s.steps >= 3 { " steadily" } else { "" };
            if first {
                format!(
                    "{}{steady} from {} to {}",
                    verb(dir),
                    y_text(chart, s.start.y),
                    y_text(chart, s.end.y)
                )
            } else {
                format!("{}{steady} to {}", verb(dir), y_text(chart, s.end.y))
            }
        }
    }
}

fn trend_answer(chart: &LoadedChart, pre: &str, m: &str, start: &Point, end: &Point, segs: &[Segment]) -> Answer {
    let mut refs = vec![start.clone()];
    refs.extend(segs.iter().map(|s| s.end.clone()));
    if segs.is_empty() {
        return Answer::one(
            format!(
                "{pre}there is only one data point, with {m} at {}.",
                y_text(chart, start.y)
            ),
            refs,
        );
    }
    if segs.len() <= 3 {
        let parts: Vec<String> = segs
            .iter()
            .enumerate()
            .map(|(i, s)| segment_phrase(chart, s, i == 0))
            .collect();
        let body = match parts.as_slice() {
            [a] => a.clone(),
            [init @ .., last] => format!("{}, then {}", init.join(", "), last),
            [] => unreachable!(),
        };
        let text = format!("{pre}{m} {body}.");
        if word_count(&text) <= MAX_WORDS {
            return Answer::one(text, refs);
        }
    }
    // Too many turns to narrate: summarise and point at the extremes.
    let hi = segs
        .iter()
        .flat_map(|s| [&s.start, &s.end])
        .max_by(|a, b| a.y.total_cmp(&b.y))
        .unwrap_or(start);
    let overall = match (end.y - start.y, super::calc::FLAT_EPS) {
        (d, eps) if d.abs() < eps => "was level overall",
        (d, _) if d > 0.0 => "rose overall",
        _ => "fell overall",
    };
    let text = format!(
        "{pre}{m} {overall} from {} to {}, changing direction {} times, and peaked at {} in {}.",
        y_text(chart, start.y),
        y_text(chart, end.y),
        segs.len() - 1,
        y_text(chart, hi.y),
        x_text(chart, &hi.x)
    );
    Answer::one(text, vec![start.clone(), hi.clone(), end.clone()])
}

fn extreme_answer(chart: &LoadedChart, pre: &str, which: &str, m: &str, value: f64, at: &[Point]) -> Answer {
    let v = y_text(chart, value);
    let places: Vec<String> = at.iter().map(|p| x_text(chart, &p.x)).collect();
    let text = format!("{pre}the {which} {m} is {v}, at {}.", join_and(&places));
    if word_count(&text) <= MAX_WORDS {
        return Answer::one(text, at.to_vec());
    }
    let text = format!(
        "{pre}the {which} {m} is {v}, reached at {} points from {} to {}.",
        at.len(),
        places[0],
        places[places.len() - 1]
    );
    Answer::one(text, at.to_vec())
}

/// Answer text for an analytic result. `span` is the first and last x in
/// scope; `series` the series the question was restricted to.
pub fn data_answer(
    chart: &LoadedChart,
    result: &AnalyticResult,
    referent: Referent,
    span: Option<(&Value, &Value)>,
    series: Option<&str>,
) -> Answer {
    let m = measure(chart, series);
    let pre = prefix(chart, referent, span);
    match result {
        AnalyticResult::Max { value, at } => extreme_answer(chart, &pre, "maximum", &m, *value, at),
        AnalyticResult::Min { value, at } => extreme_answer(chart, &pre, "minimum", &m, *value, at),
        AnalyticResult::Mean { value, n } => Answer::one(
            format!(
                "{pre}the average {m} is {}, over {n} data points.",
                y_text(chart, *value)
            ),
            Vec::new(),
        ),
        AnalyticResult::Sum { value, n } => Answer::one(
            format!("{pre}the total {m} is {}, over {n} data points.", y_text(chart, *value)),
            Vec::new(),
        ),
        AnalyticResult::Count { n, first, last } => Answer::one(
            format!(
                "{pre}there {} {n} data point{} with {m} values.",
                if *n == 1 { "is" } else { "are" },
                if *n == 1 { "" } else { "s" }
            ),
            vec![first.clone(), last.clone()],
        ),
        AnalyticResult::RangeDescribe {
            min,
            max,
            median,
            start,
            end,
            ..
        } => Answer::one(
            format!(
                "{pre}{m} ranged from {} to {}, starting at {} and ending at {}, with a median of {}.",
                y_text(chart, *min),
                y_text(chart, *max),
                y_text(chart, start.y),
                y_text(chart, end.y),
                y_text(chart, *median)
            ),
            vec![start.clone(), end.clone()],
        ),
        AnalyticResult::Trend { start, end, segments } => trend_answer(chart, &pre, &m, start, end, segments),
        AnalyticResult::ComparePoints { a, b, diff } => {
            let (xa, xb) = (x_text(chart, &a.x), x_text(chart, &b.x));
            let src = point_source(referent, 2);
            let change = if diff.abs() < super::calc::FLAT_EPS {
                "with no change".to_string()
            } else {
                format!(
                    "{} of {}",
                    if *diff > 0.0 { "an increase" } else { "a decrease" },
                    diff_text(chart, *diff)
                )
            };
            Answer::one(
                format!(
                    "Comparing {src}, {xa} and {xb}, {m} went from {} to {}, {change}.",
                    y_text(chart, a.y),
                    y_text(chart, b.y)
                ),
                vec![a.clone(), b.clone()],
            )
        }
        AnalyticResult::ValueAt { point } => Answer::one(
            format!(
                "At {}, {}, {m} is {}.",
                x_text(chart, &point.x),
                point_source(referent, 1),
                y_text(chart, point.y)
            ),
            vec![point.clone()],
        ),
    }
}

pub const CLARIFY_TOUCH: &str = "Which data points do you mean? Double-tap them on the display, then ask again.";
pub const CLARIFY_COMPARE: &str = "Which two data points should I compare? Double-tap both, then ask again.";
pub const CLARIFY_POINT: &str = "Which data point do you mean? Double-tap it, then ask again.";
pub const CLARIFY_SERIES: &str = "Which series do you mean? Double-tap a point on it, then ask again.";
pub const CLARIFY_UNKNOWN: &str = "Sorry, I did not understand. You can ask for the maximum, minimum, average, total, count, range or trend, or compare two points.";
pub const NO_CHART: &str = "No chart is loaded. Say load, followed by a chart name.";

/// Answer for a failed calculation.
pub fn error_answer(chart: &LoadedChart, err: &CalcError, referent: Referent) -> Answer {
    let text = match err {
        CalcError::EmptyRange => match referent {
            Referent::Whole => "This chart has no data to answer that.".to_string(),
            _ => "There is no data between the selected points.".to_string(),
        },
        CalcError::UnknownColumn(c) => format!("The {} chart has no column named {c}.", chart.spec.name),
        CalcError::MissingPoints { need: 2, .. } => CLARIFY_COMPARE.to_string(),
        CalcError::MissingPoints { .. } => CLARIFY_POINT.to_string(),
        CalcError::PointNotFound(x) => format!("I could not find a data point at {x}."),
    };
    Answer::plain(text)
}

/// Chart summary for the Overview intent.
pub fn overview(chart: &LoadedChart, table: &crate::chart::DataTable) -> Answer {
    let title = chart
        .spec
        .title
        .clone()
        .unwrap_or_else(|| chart.spec.name.replace('_', " "));
    let m = chart.spec.y.noun();
    let scope = super::calc::Scope::default();
    let series_field = chart.spec.series.as_ref().map(|s| s.field.as_str());
    let pts = super::calc::scoped_points(table, &chart.spec.x.field, &chart.spec.y.field, series_field, &scope)
        .unwrap_or_default();
    let mut text = format!(
        "{} is a {} of {m} by {}",
        capitalize(&title),
        chart.spec.mark.noun(),
        chart.spec.x.noun()
    );
    if let Some(s) = &chart.spec.series {
        let mut names: Vec<String> = pts.iter().filter_map(|p| p.series.clone()).collect();
        names.sort();
        names.dedup();
        text.push_str(&format!(", in {} {} series", names.len(), s.noun()));
    }
    if let (Some(a), Some(b)) = (pts.first(), pts.last()) {
        let lo = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        text.push_str(&format!(
            ", with {} data points from {} to {}. Values range from {} to {}.",
            pts.len(),
            x_text(chart, &a.x),
            x_text(chart, &b.x),
            y_text(chart, lo),
            y_text(chart, hi)
        ));
    } else {
        text.push_str(", with no data.");
    }
    Answer::plain(text)
}
