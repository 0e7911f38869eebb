//! Generators and independent oracles shared by the property suites and the
//! acceptance runner. Oracles here deliberately avoid the library's own
//! helpers for the quantity under test.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate};
use num::{BigRational, Signed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use feelgrid::agent::calc::{calculate, AnalyticResult, CalcError, Direction, Scope, Task};
use feelgrid::chart::table::parse_csv;
use feelgrid::chart::{parse_spec, scan_catalogue, ChartCatalogue, DataTable, LoadedChart, Value};
use feelgrid::device::{Packet, Run, FRAME_BYTES};
use feelgrid::input::{infer_target, Button, ButtonEvent, Edge, Finger};
use feelgrid::output::sentence_spans;
use feelgrid::render::{
    nearest_element, render, Cell, ChartElement, ElementId, ElementKind, PanDirection, TactileFrame, ViewportState,
    ZoomMode, HEIGHT, LINE_CELLS, PLOT_WIDTH, WIDTH,
};
use feelgrid::session::record::{PointPayload, PressPayload};
use feelgrid::session::{RecordedEvent, SessionInput};

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn catalogue() -> Arc<ChartCatalogue> {
    Arc::new(scan_catalogue(&root().join("data/catalogue")).expect("fixture catalogue"))
}

pub fn fixture(name: &str) -> LoadedChart {
    LoadedChart::from_path(&root().join(format!("data/catalogue/{name}.vl.json"))).expect("fixture chart")
}

pub fn chart_from(spec: &serde_json::Value, csv: &str) -> LoadedChart {
    let spec = parse_spec(spec.to_string().as_bytes()).expect("generated spec parses");
    let table = parse_csv(csv, &spec.type_hints()).expect("generated csv parses");
    LoadedChart::from_table(spec, table).expect("generated chart loads")
}

fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

// ---------------------------------------------------------------- renderer

/// A random line, point or bar chart over numeric or daily x, sometimes
/// with series and a month/week/day hierarchy. y values are multiples of
/// 1/4 so domain arithmetic stays exact.
pub fn random_chart(r: &mut Rand) -> LoadedChart {
    let mark = *["line", "point", "bar"].choose(r).unwrap();
    let temporal = r.gen_bool(0.6);
    let nseries = if mark != "bar" && r.gen_bool(0.3) {
        r.gen_range(2..=3)
    } else {
        1
    };
    let n = r.gen_range(1..=90);
    let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + Duration::days(r.gen_range(0..3000));
    let mut csv = String::from(if nseries > 1 { "x,y,s\n" } else { "x,y\n" });
    for s in 0..nseries {
        let mut x: i64 = r.gen_range(-50..50);
        for _ in 0..n {
            x += r.gen_range(1..=3);
            let y = r.gen_range(-160..=800) as f64 / 4.0;
            let xs = if temporal {
                (start + Duration::days(x + 50)).to_string()
            } else {
                x.to_string()
            };
            if nseries > 1 {
                csv.push_str(&format!("{xs},{y},s{s}\n"));
            } else {
                csv.push_str(&format!("{xs},{y}\n"));
            }
        }
    }
    let mut enc = json!({
        "x": {"field": "x", "type": if temporal { "temporal" } else { "quantitative" }},
        "y": {"field": "y", "type": "quantitative"},
    });
    if nseries > 1 {
        enc["color"] = json!({"field": "s", "type": "nominal"});
    }
    let mut spec = json!({"name": "generated", "mark": mark, "data": {"url": "generated.csv"}, "encoding": enc});
    if temporal && r.gen_bool(0.5) {
        spec["resolutions"] = json!({"units": ["month", "week", "day"], "op": "mean"});
    }
    chart_from(&spec, &csv)
}

/// Initial view followed by a few random pans and zooms, sometimes with an
/// arbitrary y window.
pub fn random_viewport(r: &mut Rand, chart: &LoadedChart) -> ViewportState {
    let mut vp = ViewportState::initial(chart, PLOT_WIDTH);
    for _ in 0..r.gen_range(0..6) {
        let next = match r.gen_range(0..6) {
            0 => Ok(vp.pan(chart, PanDirection::Left)),
            1 => Ok(vp.pan(chart, PanDirection::Right)),
            2 => Ok(vp.pan(chart, *[PanDirection::Up, PanDirection::Down].choose(r).unwrap())),
            3 => vp.zoom(chart, ZoomMode::GeometricIn, PLOT_WIDTH),
            4 => vp.zoom(chart, ZoomMode::GeometricOut, PLOT_WIDTH),
            _ => vp.zoom(
                chart,
                *[ZoomMode::SemanticIn, ZoomMode::SemanticOut].choose(r).unwrap(),
                PLOT_WIDTH,
            ),
        };
        if let Ok(v) = next {
            vp = v;
        }
    }
    if r.gen_bool(0.3) {
        let lo = r.gen_range(-60..100);
        vp.y_window = (lo as f64, (lo + r.gen_range(1..200)) as f64);
    }
    vp
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Brute force: the pin index in `0..len` nearest to `offset`, ties to the
/// larger index (half away from zero for non-negative offsets).
fn nearest_index(offset: &BigRational, len: usize) -> usize {
    let mut best = 0;
    let mut best_d = None::<BigRational>;
    for i in 0..len {
        let d = (BigRational::from_integer(i.into()) - offset).abs();
        if best_d.as_ref().is_none_or(|b| d <= *b) {
            best = i;
            best_d = Some(d);
        }
    }
    best
}

/// Exact-rational interpolation of a domain point onto the 54×34 plot area
/// whose top-left pin is (6, 0).
pub fn oracle_cell(x: f64, y: f64, xw: (f64, f64), yw: (f64, f64)) -> Cell {
    let fx = (exact(x) - exact(xw.0)) * BigRational::from_integer(53.into()) / (exact(xw.1) - exact(xw.0));
    let fy = (exact(yw.1) - exact(y)) * BigRational::from_integer(33.into()) / (exact(yw.1) - exact(yw.0));
    Cell::new(6 + nearest_index(&fx, 54) as u8, nearest_index(&fy, 34) as u8)
}

fn domain_x(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => Some(*n),
        Value::Time(t) => Some((t.date() - day0()).num_days() as f64),
        _ => None,
    }
}

/// Check every datum element of one render against the oracle, and the
/// nearest-element round trip. Returns the number of data checked.
pub fn check_render(chart: &LoadedChart, vp: &ViewportState) -> Result<usize, String> {
    let frame = render(chart, vp, 1).map_err(|e| e.to_string())?;
    let table = chart.table_for(vp.active_layer);
    let (xi, yi) = (
        table.column_index(&chart.spec.x.field).unwrap(),
        table.column_index(&chart.spec.y.field).unwrap(),
    );
    let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
    let visible = table
        .rows()
        .iter()
        .filter(|row| match (domain_x(&row[xi]), row[yi].as_f64()) {
            (Some(x), Some(y)) => inside(x, vp.x_window) && inside(y, vp.y_window),
            _ => false,
        })
        .count();
    let data: Vec<&ChartElement> = frame.data().collect();
    if data.len() + frame.occluded != visible {
        return Err(format!(
            "{} drawn + {} occluded != {visible} visible",
            data.len(),
            frame.occluded
        ));
    }
    for e in &data {
        let d = e.datum.as_ref().ok_or("datum element without datum")?;
        let row = &table.rows()[d.row];
        if row[xi] != d.x || row[yi] != d.y {
            return Err(format!("element {:?} does not match table row {}", e.id, d.row));
        }
        let want = oracle_cell(domain_x(&d.x).unwrap(), d.y.as_f64().unwrap(), vp.x_window, vp.y_window);
        if want != e.grid_position {
            return Err(format!(
                "{:?} ({:?}, {:?}) at {:?}, oracle {:?}, windows {:?} {:?}",
                e.id, d.x, d.y, e.grid_position, want, vp.x_window, vp.y_window
            ));
        }
        let back = nearest_element(&frame, e.grid_position).map(|n| n.id);
        let touched = infer_target(e.grid_position.center(), &frame, 1.0, 3.0).map(|t| t.element);
        if back != Some(e.id) || touched != Some(e.id) {
            return Err(format!("round trip of {:?} gave {back:?} / {touched:?}", e.id));
        }
    }
    Ok(data.len())
}

// --------------------------------------------------------- target inference

/// A frame with `n` elements on distinct random cells.
pub fn random_element_frame(r: &mut Rand, n: usize) -> TactileFrame {
    let mut f = TactileFrame::blank(1);
    let mut used = std::collections::HashSet::new();
    while f.elements.len() < n {
        let c = Cell::new(r.gen_range(0..WIDTH as u8), r.gen_range(0..HEIGHT as u8));
        if !used.insert(c) {
            continue;
        }
        f.elements.push(ChartElement {
            id: ElementId(f.elements.len() as u32),
            kind: ElementKind::Datum,
            grid_position: c,
            footprint: vec![c],
            datum: None,
            axis: None,
            label: String::new(),
        });
    }
    f
}

/// Nearest element centre within `radius`, ties to the smaller id.
pub fn nearest_oracle(frame: &TactileFrame, p: (f64, f64), radius: f64) -> Option<ElementId> {
    let mut best: Option<(f64, ElementId)> = None;
    for e in &frame.elements {
        let (cx, cy) = (e.grid_position.col as f64 + 0.5, e.grid_position.row as f64 + 0.5);
        let d2 = (cx - p.0) * (cx - p.0) + (cy - p.1) * (cy - p.1);
        if d2 > radius * radius {
            continue;
        }
        if best.is_none_or(|(bd, bid)| d2 < bd || (d2 == bd && e.id < bid)) {
            best = Some((d2, e.id));
        }
    }
    best.map(|b| b.1)
}

/// A touch point: uniform, on a pin centre, or halfway between two pins.
pub fn random_touch(r: &mut Rand) -> (f64, f64) {
    match r.gen_range(0..3) {
        0 => (r.gen_range(0.0..WIDTH as f64), r.gen_range(0.0..HEIGHT as f64)),
        1 => (r.gen_range(0..WIDTH) as f64 + 0.5, r.gen_range(0..HEIGHT) as f64 + 0.5),
        _ => (r.gen_range(0..WIDTH) as f64 + 1.0, r.gen_range(0..HEIGHT) as f64 + 0.5),
    }
}

// ------------------------------------------------------------------ buttons

pub fn press(button: Button, down: u64, up: u64) -> [ButtonEvent; 2] {
    [
        ButtonEvent {
            button,
            edge: Edge::Down,
            t: down,
        },
        ButtonEvent {
            button,
            edge: Edge::Up,
            t: up,
        },
    ]
}

/// Edges of two presses merged in time order.
pub fn merged(a: [ButtonEvent; 2], b: [ButtonEvent; 2]) -> Vec<ButtonEvent> {
    let mut v: Vec<ButtonEvent> = a.into_iter().chain(b).collect();
    v.sort_by_key(|e| e.t);
    v
}

/// A random recorded session over the fixture catalogue: taps, presses,
/// raw button edges and queries.
pub fn random_session(r: &mut Rand) -> Vec<RecordedEvent> {
    const QUERIES: [&str; 6] = [
        "what is the highest interest rate?",
        "What was the trend of the interest rate data during this period?",
        "compare these two points",
        "what is the value here?",
        "zoom in",
        "describe the chart",
    ];
    let mut t = 0;
    let mut out = vec![RecordedEvent {
        t,
        input: SessionInput::Load {
            chart: "interest_rates".into(),
        },
    }];
    for _ in 0..r.gen_range(1..12) {
        t += r.gen_range(50..2500);
        let finger = if r.gen_bool(0.5) {
            Finger::LeftIndex
        } else {
            Finger::RightIndex
        };
        let point = PointPayload {
            finger,
            x: r.gen_range(0.0..60.0),
            y: r.gen_range(0.0..40.0),
        };
        let input = match r.gen_range(0..5) {
            0 => SessionInput::Tap(point),
            1 => SessionInput::DoubleTap(point),
            2 => SessionInput::Press(PressPayload {
                button: *Button::ALL.choose(r).unwrap(),
                hold_ms: Some(r.gen_range(20..900)),
            }),
            3 => SessionInput::Button {
                button: *Button::ALL.choose(r).unwrap(),
                edge: if r.gen_bool(0.5) { Edge::Down } else { Edge::Up },
            },
            _ => SessionInput::Query {
                transcript: QUERIES.choose(r).unwrap().to_string(),
            },
        };
        out.push(RecordedEvent { t, input });
    }
    out.push(RecordedEvent {
        t: t + 5000,
        input: SessionInput::End,
    });
    out
}

// ----------------------------------------------------------------- chunking

const WORDS: [&str; 14] = [
    "rates", "rose", "In", "June", "the", "Data", "fell", "quickly", "and", "then", "held", "steady", "café", "Über",
];
const NUMBERS: [&str; 8] = ["3.85", "0.25%", "0.1%", "12.5", "1,200.75", "$4.50", "-0.3", "2023"];
const TRICKY: [&str; 8] = ["e.g.", "approx.", "vs.", "Q2.", "(see Fig.", "\"Yes.\"", "etc.", "i.e."];
const ENDS: [&str; 5] = [".", "!", "?", "...", ".)"];

/// A random response built from words, decimal numbers, abbreviations and
/// sentence ends, with uneven whitespace.
pub fn fuzz_response(r: &mut Rand) -> String {
    let mut s = String::new();
    for _ in 0..r.gen_range(1..6) {
        for w in 0..r.gen_range(1..10) {
            if w > 0 {
                s.push_str([" ", " ", " ", "  ", "\n"].choose(r).unwrap());
            }
            let pool: &[&str] = match r.gen_range(0..6) {
                0 | 1 => &NUMBERS,
                2 => &TRICKY,
                _ => &WORDS,
            };
            s.push_str(pool.choose(r).unwrap());
        }
        if r.gen_bool(0.85) {
            s.push_str(ENDS.choose(r).unwrap());
        }
        s.push_str(["", " ", " ", "  ", "\n"].choose(r).unwrap());
    }
    s
}

/// Byte ranges of numbers with an internal decimal point or comma.
pub fn decimal_numbers(text: &str) -> Vec<std::ops::Range<usize>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if !b[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < b.len()
            && (b[i].is_ascii_digit()
                || ((b[i] == b'.' || b[i] == b',') && b.get(i + 1).is_some_and(u8::is_ascii_digit)))
        {
            i += 1;
        }
        if text[start..i].contains(['.', ',']) {
            out.push(start..i);
        }
    }
    out
}

/// Concatenation identity and the decimal guard for one text.
pub fn check_chunks(text: &str) -> Result<usize, String> {
    let spans = sentence_spans(text);
    let joined: String = spans.iter().map(|r| &text[r.clone()]).collect();
    if joined != text {
        return Err(format!("chunks do not re-join to {text:?}"));
    }
    if spans.iter().any(|r| r.is_empty()) {
        return Err(format!("empty chunk in {text:?}"));
    }
    for n in decimal_numbers(text) {
        if spans.iter().any(|s| s.start > n.start && s.start < n.end) {
            return Err(format!("split inside {:?} in {text:?}", &text[n]));
        }
    }
    Ok(spans.len())
}

// ---------------------------------------------------------------- transforms

/// A daily table `day,visits` over 1-400 consecutive days with integer
/// visits and some gaps (nulls).
pub fn random_daily_csv(r: &mut Rand) -> (String, Vec<(NaiveDate, Option<f64>)>) {
    let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap() + Duration::days(r.gen_range(0..4000));
    let n = r.gen_range(1..=400);
    let mut csv = String::from("day,visits\n");
    let mut rows = Vec::new();
    for i in 0..n {
        let d = start + Duration::days(i);
        let v = (!r.gen_bool(0.05)).then(|| r.gen_range(0..5000) as f64);
        match v {
            Some(v) => csv.push_str(&format!("{d},{v}\n")),
            None => csv.push_str(&format!("{d},\n")),
        }
        rows.push((d, v));
    }
    (csv, rows)
}

/// Bucket start for a unit name, computed from the calendar directly.
pub fn bucket(unit: &str, d: NaiveDate) -> NaiveDate {
    match unit {
        "day" => d,
        "week" => d - Duration::days(d.weekday().number_from_monday() as i64 - 1),
        "month" => NaiveDate::from_ymd_opt(d.year(), d.month(), 1).unwrap(),
        _ => unreachable!(),
    }
}

/// Brute-force (sum, count) of non-null values per bucket.
pub fn bucket_totals(rows: &[(NaiveDate, Option<f64>)], unit: &str) -> BTreeMap<NaiveDate, (f64, usize)> {
    let mut m: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for (d, v) in rows {
        let e = m.entry(bucket(unit, *d)).or_default();
        if let Some(v) = v {
            e.0 += v;
            e.1 += 1;
        }
    }
    m
}

/// `(bucket start, value)` pairs of an aggregated layer table.
pub fn layer_values(t: &DataTable) -> Vec<(NaiveDate, Option<f64>)> {
    let (di, vi) = (t.column_index("day").unwrap(), t.column_index("visits").unwrap());
    t.rows()
        .iter()
        .map(|r| (r[di].as_time().expect("temporal key").date(), r[vi].as_f64()))
        .collect()
}

// ------------------------------------------------------------------ protocol

pub fn random_packet(r: &mut Rand) -> Packet {
    match r.gen_range(0..5) {
        0 => Packet::FullFrame((0..FRAME_BYTES).map(|_| r.gen()).collect()),
        1 => Packet::Partial(
            (0..r.gen_range(0..8))
                .map(|_| {
                    let col = r.gen_range(0..WIDTH as u8);
                    let len = r.gen_range(1..=WIDTH as u8 - col);
                    Run {
                        col,
                        row: r.gen_range(0..HEIGHT as u8),
                        bits: (0..len).map(|_| r.gen()).collect(),
                    }
                })
                .collect(),
        ),
        2 => {
            let mut cells = [0u8; LINE_CELLS];
            cells.iter_mut().for_each(|c| *c = r.gen_range(0..64));
            Packet::BrailleLine(cells)
        }
        3 => Packet::Clear,
        _ => Packet::Pulse {
            rate_dhz: r.gen_range(1..=255),
            duty_pct: r.gen_range(1..100),
            duration_ms: r.gen_range(0..5000),
            cells: (0..r.gen_range(0..12))
                .map(|_| Cell::new(r.gen_range(0..WIDTH as u8), r.gen_range(0..HEIGHT as u8)))
                .collect(),
        },
    }
}

/// Off interval of one pulse period, relative to the pulse start.
#[derive(Debug, Clone)]
struct Dip {
    cell: Cell,
    from: u64,
    to: u64,
}

/// What the display should show, replayed straight from the packet list.
#[derive(Debug, Clone)]
pub struct DisplayOracle {
    pub pins: Vec<bool>,
    pub braille: [u8; LINE_CELLS],
    dips: Vec<Dip>,
}

impl Default for DisplayOracle {
    fn default() -> Self {
        Self {
            pins: vec![false; WIDTH * HEIGHT],
            braille: [0; LINE_CELLS],
            dips: Vec::new(),
        }
    }
}

impl DisplayOracle {
    pub fn apply(&mut self, t: u64, p: &Packet) {
        match p {
            Packet::FullFrame(bytes) => {
                for row in 0..HEIGHT {
                    for col in 0..WIDTH {
                        let bit = row * WIDTH + col;
                        self.pins[bit] = (bytes[bit / 8] >> (7 - bit % 8)) & 1 == 1;
                    }
                }
            }
            Packet::Partial(runs) => {
                for run in runs {
                    for (k, &b) in run.bits.iter().enumerate() {
                        self.pins[run.row as usize * WIDTH + run.col as usize + k] = b;
                    }
                }
            }
            Packet::BrailleLine(cells) => self.braille = *cells,
            Packet::Clear => {
                self.pins = vec![false; WIDTH * HEIGHT];
                self.braille = [0; LINE_CELLS];
                self.dips.retain(|d| d.from < t);
                for d in &mut self.dips {
                    d.to = d.to.min(t);
                }
            }
            Packet::Pulse {
                rate_dhz,
                duty_pct,
                duration_ms,
                cells,
            } => {
                let period = 10_000.0 / *rate_dhz as f64;
                let off = period * (100 - *duty_pct as u64) as f64 / 100.0;
                let dur = *duration_ms as f64;
                let mut k = 0.0;
                while k * period < dur {
                    let from = t + (k * period).round() as u64;
                    let to = t + (k * period + off).min(dur).round() as u64;
                    for &cell in cells {
                        self.dips.push(Dip { cell, from, to });
                    }
                    k += 1.0;
                }
            }
        }
    }

    /// Pins at `t`: static state with every pulse dip covering `t` inverted.
    pub fn pins_at(&self, t: u64) -> Vec<bool> {
        let mut pins = self.pins.clone();
        for d in self.dips.iter().filter(|d| d.from <= t && t < d.to) {
            let i = d.cell.row as usize * WIDTH + d.cell.col as usize;
            pins[i] = !pins[i];
        }
        pins
    }
}

// --------------------------------------------------------------- calculation

#[derive(Debug, Clone)]
pub struct CalcCase {
    pub table: DataTable,
    pub rows: Vec<(i64, Option<i64>, Option<String>)>,
    pub has_series: bool,
    pub scope: Scope,
}

/// A random numeric table of at most 1,000 rows with repeated x values,
/// nulls, an optional series column, and a random scope.
pub fn random_calc_case(r: &mut Rand) -> CalcCase {
    let n = r.gen_range(1..=1000);
    let has_series = r.gen_bool(0.4);
    let mut x: i64 = r.gen_range(-100..100);
    let mut rows = Vec::new();
    let mut csv = String::from(if has_series { "x,y,s\n" } else { "x,y\n" });
    for _ in 0..n {
        x += r.gen_range(0..=3);
        let y = (!r.gen_bool(0.05)).then(|| r.gen_range(-500..=500));
        let s = has_series.then(|| ["a", "b", "c"].choose(r).unwrap().to_string());
        let ys = y.map(|v| v.to_string()).unwrap_or_default();
        match &s {
            Some(s) => csv.push_str(&format!("{x},{ys},{s}\n")),
            None => csv.push_str(&format!("{x},{ys}\n")),
        }
        rows.push((x, y, s));
    }
    let hints = [
        ("x".to_string(), feelgrid::chart::FieldType::Quantitative),
        ("y".to_string(), feelgrid::chart::FieldType::Quantitative),
    ]
    .into();
    let table = parse_csv(&csv, &hints).expect("calc table");
    let pick = |r: &mut Rand| rows[r.gen_range(0..rows.len())].0 + if r.gen_bool(0.1) { 10_000 } else { 0 };
    let range = r.gen_bool(0.7).then(|| {
        let (a, b) = (pick(r), pick(r));
        (Value::Number(a as f64), Value::Number(b as f64))
    });
    let series = (has_series && r.gen_bool(0.5)).then(|| ["a", "b", "c", "d"].choose(r).unwrap().to_string());
    let points = vec![Value::Number(pick(r) as f64), Value::Number(pick(r) as f64)];
    CalcCase {
        table,
        rows,
        has_series,
        scope: Scope { range, series, points },
    }
}

/// (row index, x, y) for rows in scope, stable-sorted by x.
fn brute_points(c: &CalcCase, with_range: bool) -> Vec<(usize, i64, i64)> {
    let range = c.scope.range.as_ref().filter(|_| with_range).map(|(a, b)| {
        let (a, b) = (a.as_f64().unwrap() as i64, b.as_f64().unwrap() as i64);
        (a.min(b), a.max(b))
    });
    let mut pts: Vec<(usize, i64, i64)> = c
        .rows
        .iter()
        .enumerate()
        .filter(|(_, (_, y, _))| y.is_some())
        .filter(|(_, (_, _, s))| c.scope.series.is_none() || s.as_ref() == c.scope.series.as_ref())
        .filter(|(_, (x, _, _))| range.is_none_or(|(lo, hi)| *x >= lo && *x <= hi))
        .map(|(i, (x, y, _))| (i, *x, y.unwrap()))
        .collect();
    pts.sort_by_key(|p| p.1);
    pts
}

fn brute_quantile(sorted: &[i64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] as f64 + (h - lo as f64) * (sorted[hi] - sorted[lo]) as f64
}

/// Run one task through the library and compare with a brute-force answer.
pub fn check_task(c: &CalcCase, task: Task) -> Result<(), String> {
    let sf = c.has_series.then_some("s");
    let got = calculate(task, &c.table, "x", "y", sf, &c.scope);
    let num = |v: i64| v as f64;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let fail = |what: &str| Err(format!("{task:?}: {what}; got {got:?}"));

    if task.points_needed() > 0 {
        let all = brute_points(c, false);
        let find = |v: &Value| all.iter().find(|p| num(p.1) == v.as_f64().unwrap()).copied();
        let (a, b) = (find(&c.scope.points[0]), find(&c.scope.points[1]));
        return match (task, &got) {
            (Task::ValueAt, Ok(AnalyticResult::ValueAt { point })) => match a {
                Some(a) if point.row == a.0 && point.y == num(a.2) => Ok(()),
                _ => fail("wrong point"),
            },
            (Task::ComparePoints, Ok(AnalyticResult::ComparePoints { a: pa, b: pb, diff })) => match (a, b) {
                (Some(a), Some(b)) => {
                    let (lo, hi) = if a.1 <= b.1 { (a, b) } else { (b, a) };
                    if pa.row == lo.0 && pb.row == hi.0 && *diff == num(hi.2 - lo.2) {
                        Ok(())
                    } else {
                        fail("wrong comparison")
                    }
                }
                _ => fail("found points the oracle did not"),
            },
            (_, Err(CalcError::PointNotFound(_))) if a.is_none() || (task == Task::ComparePoints && b.is_none()) => {
                Ok(())
            }
            _ => fail("unexpected outcome"),
        };
    }

    let pts = brute_points(c, true);
    if pts.is_empty() {
        return match got {
            Err(CalcError::EmptyRange) => Ok(()),
            _ => fail("expected an empty range"),
        };
    }
    let ys: Vec<i64> = pts.iter().map(|p| p.2).collect();
    let n = pts.len();
    let rows_at = |v: i64| pts.iter().filter(|p| p.2 == v).map(|p| p.0).collect::<Vec<_>>();
    let ok = match (&got, task) {
        (Ok(AnalyticResult::Min { value, at }), Task::Min) => {
            let m = *ys.iter().min().unwrap();
            *value == num(m) && at.iter().map(|p| p.row).collect::<Vec<_>>() == rows_at(m)
        }
        (Ok(AnalyticResult::Max { value, at }), Task::Max) => {
            let m = *ys.iter().max().unwrap();
            *value == num(m) && at.iter().map(|p| p.row).collect::<Vec<_>>() == rows_at(m)
        }
        (Ok(AnalyticResult::Sum { value, n: k }), Task::Sum) => *value == num(ys.iter().sum()) && *k == n,
        (Ok(AnalyticResult::Count { n: k, first, last }), Task::Count) => {
            *k == n && first.row == pts[0].0 && last.row == pts[n - 1].0
        }
        (Ok(AnalyticResult::Mean { value, n: k }), Task::Mean) => {
            close(*value, ys.iter().sum::<i64>() as f64 / n as f64) && *k == n
        }
        (
            Ok(AnalyticResult::RangeDescribe {
                min,
                max,
                q1,
                median,
                q3,
                start,
                end,
                n: k,
            }),
            Task::RangeDescribe,
        ) => {
            let mut s = ys.clone();
            s.sort_unstable();
            *min == num(s[0])
                && *max == num(s[n - 1])
                && close(*q1, brute_quantile(&s, 0.25))
                && close(*median, brute_quantile(&s, 0.5))
                && close(*q3, brute_quantile(&s, 0.75))
                && start.row == pts[0].0
                && end.row == pts[n - 1].0
                && *k == n
        }
        (Ok(AnalyticResult::Trend { start, end, segments }), Task::Trend) => {
            let mut runs: Vec<(Direction, usize, usize, usize)> = Vec::new();
            for i in 1..n {
                let d = match ys[i].cmp(&ys[i - 1]) {
                    std::cmp::Ordering::Less => Direction::Decline,
                    std::cmp::Ordering::Equal => Direction::Plateau,
                    std::cmp::Ordering::Greater => Direction::Rise,
                };
                match runs.last_mut() {
                    Some(r) if r.0 == d => {
                        r.2 = pts[i].0;
                        r.3 += 1;
                    }
                    _ => runs.push((d, pts[i - 1].0, pts[i].0, 1)),
                }
            }
            let got: Vec<(Direction, usize, usize, usize)> = segments
                .iter()
                .map(|s| (s.direction, s.start.row, s.end.row, s.steps))
                .collect();
            start.row == pts[0].0 && end.row == pts[n - 1].0 && got == runs
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        fail("disagrees with brute force")
    }
}
