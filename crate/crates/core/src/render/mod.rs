//! Rendering a loaded chart and viewport onto the 60×40 pin grid.
//!
//! Layout: columns 0-5 and rows 34-39 are axis margins. The y-axis line is
//! column 5, the x-axis line row 34; ticks sit one pin outside them (column 4,
//! row 35). The plot area is columns 6-59 by rows 0-33. Scroll bars use the
//! outermost margin strips: row 39 for off-window data left or right, column
//! 0 for data above or below.

pub mod braille;
pub mod frame;
pub mod viewport;

use std::collections::HashSet;

pub use braille::{paginate, BrailleCell, BrailleLine, LINE_CELLS};
pub use frame::{Axis, Cell, ChartElement, Datum, ElementId, ElementKind, Marker, TactileFrame, HEIGHT, WIDTH};
pub use viewport::{
    data_extent, in_window_count, select_layer, Axes, PanDirection, Scale, ViewportError, ViewportState, Window,
    ZoomMode,
};

use crate::chart::value::{format_number, round_half_away};
use crate::chart::{format_with_unit, FieldType, LoadedChart, Mark, Value};

pub const PLOT_LEFT: usize = 6;
pub const PLOT_TOP: usize = 0;
pub const PLOT_WIDTH: usize = 54;
pub const PLOT_HEIGHT: usize = 34;
pub const Y_AXIS_COL: u8 = 5;
pub const X_AXIS_ROW: u8 = 34;
pub const Y_TICK_COL: u8 = 4;
pub const X_TICK_ROW: u8 = 35;
pub const SCROLL_ROW: u8 = 39;
pub const SCROLL_COL: u8 = 0;
pub const Y_LABEL_CELL: Cell = Cell::new(2, 16);
pub const X_LABEL_CELL: Cell = Cell::new(32, 37);
pub const MAX_X_TICKS: usize = 5;
pub const MAX_Y_TICKS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("viewport windows must satisfy lo < hi and magnification >= 1")]
    InvalidViewport,
    #[error("({x}, {y}) lies outside the viewport windows")]
    OutOfWindow { x: f64, y: f64 },
}

/// Fill pattern distinguishing series, in assignment order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Texture {
    Solid,
    Dotted,
    Dashed,
    Sparse,
}

impl Texture {
    pub const ALL: [Texture; 4] = [Texture::Solid, Texture::Dotted, Texture::Dashed, Texture::Sparse];

    pub fn for_series(index: usize) -> Self {
        Self::ALL[index % Self::ALL.len()]
    }

    /// Whether the `i`-th interior cell of a line segment is raised.
    pub fn line_pin(self, i: usize) -> bool {
        match self {
            Texture::Solid => true,
            Texture::Dotted => i.is_multiple_of(2),
            Texture::Dashed => i % 3 != 2,
            Texture::Sparse => i.is_multiple_of(3),
        }
    }

    /// Extra cell of a point glyph, relative to the anchor.
    fn glyph_offset(self) -> Option<(i64, i64)> {
        match self {
            Texture::Solid => None,
            Texture::Dotted => Some((0, 1)),
            Texture::Dashed => Some((1, 0)),
            Texture::Sparse => Some((1, 1)),
        }
    }
}

/// Linear interpolation of a domain point onto the plot area, rounding half
/// away from zero. Row 0 is the top, so y is inverted.
pub fn map_to_grid(x: f64, y: f64, x_window: Window, y_window: Window) -> Result<Cell, RenderError> {
    let inside = |v: f64, (lo, hi): Window| v >= lo && v <= hi;
    if !inside(x, x_window) || !inside(y, y_window) {
        return Err(RenderError::OutOfWindow { x, y });
    }
    // Multiply before dividing and round before offsetting: a domain point
    // exactly halfway between pins then rounds the same way every time.
    let col = round_half_away((x - x_window.0) * (PLOT_WIDTH - 1) as f64 / (x_window.1 - x_window.0));
    let row = round_half_away((y_window.1 - y) * (PLOT_HEIGHT - 1) as f64 / (y_window.1 - y_window.0));
    Ok(Cell::new((PLOT_LEFT as i64 + col) as u8, (PLOT_TOP as i64 + row) as u8))
}

fn plot_cell(col: i64, row: i64) -> Option<Cell> {
    let cols = PLOT_LEFT as i64..(PLOT_LEFT + PLOT_WIDTH) as i64;
    let rows = PLOT_TOP as i64..(PLOT_TOP + PLOT_HEIGHT) as i64;
    (cols.contains(&col) && rows.contains(&row)).then(|| Cell::new(col as u8, row as u8))
}

/// One plottable row of the active table.
#[derive(Debug, Clone)]
struct Point {
    x: f64,
    y: f64,
    series: usize,
    datum: Datum,
}

fn series_names(chart: &LoadedChart) -> Vec<String> {
    let Some(def) = &chart.spec.series else {
        return Vec::new();
    };
    let mut names: Vec<Value> = Vec::new();
    for v in chart.table.values(&def.field).into_iter().flatten() {
        if !names.contains(v) {
            names.push(v.clone());
        }
    }
    if def.ty == FieldType::Ordinal {
        names.sort_by(|a, b| a.total_cmp(b));
    }
    names.iter().map(|v| v.label(0)).collect()
}

fn collect_points(chart: &LoadedChart, layer: Option<crate::transform::LayerId>, axes: &Axes) -> Vec<Point> {
    let t = chart.table_for(layer);
    let (Some(xi), Some(yi)) = (t.column_index(&chart.spec.x.field), t.column_index(&chart.spec.y.field)) else {
        return Vec::new();
    };
    let si = chart.spec.series.as_ref().and_then(|s| t.column_index(&s.field));
    let names = series_names(chart);
    let mut pts: Vec<Point> = t
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(row, r)| {
            let x = axes.x.position(&r[xi])?;
            let y = axes.y.position(&r[yi])?;
            let series_label = si.map(|i| r[i].label(0));
            let series = series_label
                .as_ref()
                .and_then(|s| names.iter().position(|n| n == s))
                .unwrap_or(0);
            Some(Point {
                x,
                y,
                series,
                datum: Datum {
                    x: r[xi].clone(),
                    y: r[yi].clone(),
                    series: series_label,
                    row,
                },
            })
        })
        .collect();
    pts.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.total_cmp(&b.x)));
    pts
}

/// Spoken label for a datum, e.g. "2020 Quarter 2, interest 0.25%".
pub fn datum_label(chart: &LoadedChart, datum: &Datum) -> String {
    let x = value_text(chart, &datum.x, &chart.spec.x);
    let y = value_text(chart, &datum.y, &chart.spec.y);
    let measure = chart.spec.y.field.replace('_', " ");
    match &datum.series {
        Some(s) => format!("{s}: {x}, {measure} {y}"),
        None => format!("{x}, {measure} {y}"),
    }
}

fn value_text(chart: &LoadedChart, v: &Value, def: &crate::chart::FieldDef) -> String {
    match v {
        Value::Time(t) => t.spoken(),
        Value::Number(n) if def.field == chart.spec.y.field => chart.format_y(*n),
        Value::Number(n) => {
            let d = def
                .decimals
                .or_else(|| chart.table.column(&def.field).map(|c| c.decimals))
                .unwrap_or(0);
            format_with_unit(&format_number(*n, d), def.unit.as_deref())
        }
        other => other.label(0),
    }
}

/// Round tick values: at most `max` multiples of a 1/2/5 step inside the window.
pub fn nice_ticks((lo, hi): Window, max: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || max == 0 {
        return Vec::new();
    }
    const MULTS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
    // Start an order of magnitude below the span per tick and grow the step
    // until the count fits, so the densest round spacing wins.
    let mut exp = (span / max as f64).log10().floor() as i32 - 1;
    let mut mult_idx = 0;
    loop {
        let step = MULTS[mult_idx] * 10f64.powi(exp);
        let first = (lo / step - 1e-9).ceil() as i64;
        let last = (hi / step + 1e-9).floor() as i64;
        if last - first < max as i64 {
            return (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    if v == 0.0 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
        }
        mult_idx += 1;
        if mult_idx == MULTS.len() {
            mult_idx = 0;
            exp += 1;
        }
    }
}

/// Pick up to `max` evenly spaced items, always including both ends.
fn spread<T: Clone>(items: &[T], max: usize) -> Vec<T> {
    if items.len() <= max {
        return items.to_vec();
    }
    (0..max)
        .map(|i| items[round_half_away(i as f64 * (items.len() - 1) as f64 / (max - 1) as f64) as usize].clone())
        .collect()
}

fn tick_decimals(ticks: &[f64]) -> usize {
    (0..6)
        .find(|&d| ticks.iter().all(|t| (t * 10f64.powi(d as i32)).fract().abs() < 1e-6))
        .unwrap_or(6)
}

/// Render `chart` under `vp`. Data outside the windows are not drawn; an
/// empty window still yields axes and is flagged on the frame.
pub fn render(chart: &LoadedChart, vp: &ViewportState, frame_id: u64) -> Result<TactileFrame, RenderError> {
    if !vp.is_valid() {
        return Err(RenderError::InvalidViewport);
    }
    let axes = Axes::for_chart(chart);
    let mut f = TactileFrame::blank(frame_id);
    f.layer = vp.active_layer;
    let (xw, yw) = (vp.x_window, vp.y_window);

    for row in 0..=X_AXIS_ROW {
        f.set(Cell::new(Y_AXIS_COL, row), true, Marker::YAxis);
    }
    for col in Y_AXIS_COL..WIDTH as u8 {
        f.set(Cell::new(col, X_AXIS_ROW), true, Marker::XAxis);
    }

    let pts = collect_points(chart, vp.active_layer, &axes);
    let inside = |p: &Point| p.x >= xw.0 && p.x <= xw.1 && p.y >= yw.0 && p.y <= yw.1;
    let visible: Vec<&Point> = pts.iter().filter(|p| inside(p)).collect();
    f.empty_viewport = visible.is_empty();

    scroll_bars(&mut f, &pts, xw, yw);

    let zero_row = if yw.0 <= 0.0 && 0.0 <= yw.1 {
        let row = map_to_grid(xw.0, 0.0, xw, yw)?.row;
        for col in PLOT_LEFT..PLOT_LEFT + PLOT_WIDTH {
            f.set(Cell::new(col as u8, row), true, Marker::ZeroLine);
        }
        Some(row)
    } else {
        None
    };

    let cells: Vec<Cell> = visible
        .iter()
        .map(|p| map_to_grid(p.x, p.y, xw, yw))
        .collect::<Result<_, _>>()?;

    if chart.spec.mark == Mark::Line {
        for (i, pair) in visible.windows(2).enumerate() {
            if pair[0].series == pair[1].series {
                draw_segment(&mut f, cells[i], cells[i + 1], Texture::for_series(pair[0].series));
            }
        }
    }

    let single_series = chart.spec.series.is_none();
    let bar_width = if chart.spec.mark == Mark::Bar && single_series {
        let mut cols: Vec<u8> = cells.iter().map(|c| c.col).collect();
        cols.sort_unstable();
        cols.dedup();
        let min_gap = cols.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(u8::MAX);
        let touches_edge = cols.last() == Some(&((PLOT_LEFT + PLOT_WIDTH - 1) as u8));
        if min_gap >= 3 || (min_gap >= 2 && !touches_edge) {
            2
        } else {
            1
        }
    } else {
        1
    };

    let mut taken: HashSet<Cell> = HashSet::new();
    let mut next_id = 0u32;
    for (p, &anchor) in visible.iter().zip(&cells) {
        let texture = Texture::for_series(p.series);
        let footprint = match chart.spec.mark {
            Mark::Bar => bar_cells(anchor, zero_row, bar_width),
            Mark::Point => glyph_cells(anchor, texture),
            Mark::Line => vec![anchor],
        };
        if footprint.iter().any(|c| taken.contains(c)) {
            f.occluded += 1;
            continue;
        }
        for &c in &footprint {
            taken.insert(c);
            f.set(c, true, Marker::DataPoint);
        }
        if chart.spec.mark == Mark::Point {
            suppress_halo(&mut f, &footprint, &taken);
        }
        f.elements.push(ChartElement {
            id: ElementId(next_id),
            kind: ElementKind::Datum,
            grid_position: anchor,
            footprint,
            label: datum_label(chart, &p.datum),
            datum: Some(p.datum.clone()),
            axis: None,
        });
        next_id += 1;
    }

    // Ticks and axis labels.
    let mut push = |f: &mut TactileFrame, kind, cell: Cell, axis, label: String| {
        f.elements.push(ChartElement {
            id: ElementId(next_id),
            kind,
            grid_position: cell,
            footprint: vec![cell],
            datum: None,
            axis: Some(axis),
            label,
        });
        next_id += 1;
    };
    let y_ticks = if axes.y.is_band() {
        Vec::new()
    } else {
        nice_ticks(yw, MAX_Y_TICKS)
    };
    let yd = tick_decimals(&y_ticks);
    for v in y_ticks {
        let cell = Cell::new(Y_TICK_COL, map_to_grid(xw.0, v, xw, yw)?.row);
        f.set(cell, true, Marker::YAxis);
        let text = format_with_unit(&format_number(v, yd), chart.spec.y.unit.as_deref());
        push(&mut f, ElementKind::AxisTick, cell, Axis::Y, text);
    }
    for (pos, text) in x_ticks(chart, &axes, &pts, xw) {
        let cell = Cell::new(map_to_grid(pos, yw.0, xw, yw)?.col, X_TICK_ROW);
        f.set(cell, true, Marker::XAxis);
        push(&mut f, ElementKind::AxisTick, cell, Axis::X, text);
    }
    let title = |def: &crate::chart::FieldDef| def.title.clone().unwrap_or_else(|| def.field.replace('_', " "));
    push(
        &mut f,
        ElementKind::AxisLabel,
        Y_LABEL_CELL,
        Axis::Y,
        title(&chart.spec.y),
    );
    push(
        &mut f,
        ElementKind::AxisLabel,
        X_LABEL_CELL,
        Axis::X,
        title(&chart.spec.x),
    );

    if let Some(t) = chart.spec.title.as_deref().filter(|t| !t.trim().is_empty()) {
        f.braille_pages.extend(paginate(t));
    }
    f.braille_pages
        .extend(paginate(&format!("x: {}", title(&chart.spec.x))));
    f.braille_pages
        .extend(paginate(&format!("y: {}", title(&chart.spec.y))));
    Ok(f)
}

fn x_ticks(chart: &LoadedChart, axes: &Axes, pts: &[Point], xw: Window) -> Vec<(f64, String)> {
    match &axes.x {
        Scale::Linear => {
            let ticks = nice_ticks(xw, MAX_X_TICKS);
            let d = tick_decimals(&ticks);
            ticks
                .into_iter()
                .map(|v| (v, format_with_unit(&format_number(v, d), chart.spec.x.unit.as_deref())))
                .collect()
        }
        Scale::Time => {
            let mut seen: Vec<(f64, String)> = Vec::new();
            for p in pts.iter().filter(|p| p.x >= xw.0 && p.x <= xw.1) {
                if let Value::Time(t) = &p.datum.x {
                    if !seen.iter().any(|(x, _)| *x == p.x) {
                        seen.push((p.x, t.short()));
                    }
                }
            }
            seen.sort_by(|a, b| a.0.total_cmp(&b.0));
            spread(&seen, MAX_X_TICKS)
        }
        Scale::Band(cats) => {
            let inside: Vec<(f64, String)> = cats
                .iter()
                .enumerate()
                .map(|(i, c)| (i as f64, c.clone()))
                .filter(|(x, _)| *x >= xw.0 && *x <= xw.1)
                .collect();
            spread(&inside, MAX_X_TICKS)
        }
    }
}

/// Edge strips whose length is proportional to the share of data beyond each
/// side of the window.
fn scroll_bars(f: &mut TactileFrame, pts: &[Point], xw: Window, yw: Window) {
    let n = pts.len();
    if n == 0 {
        return;
    }
    let frac = |k: usize| k as f64 / n as f64;
    let len = |k: usize, full: usize| (round_half_away(frac(k) * full as f64) as usize).clamp(1, full);
    let left = pts.iter().filter(|p| p.x < xw.0).count();
    let right = pts.iter().filter(|p| p.x > xw.1).count();
    let above = pts.iter().filter(|p| p.y > yw.1).count();
    let below = pts.iter().filter(|p| p.y < yw.0).count();
    if left > 0 {
        for c in PLOT_LEFT..PLOT_LEFT + len(left, PLOT_WIDTH) {
            f.set(Cell::new(c as u8, SCROLL_ROW), true, Marker::ScrollBar);
        }
    }
    if right > 0 {
        let end = PLOT_LEFT + PLOT_WIDTH;
        for c in end - len(right, PLOT_WIDTH)..end {
            f.set(Cell::new(c as u8, SCROLL_ROW), true, Marker::ScrollBar);
        }
    }
    if above > 0 {
        for r in PLOT_TOP..PLOT_TOP + len(above, PLOT_HEIGHT) {
            f.set(Cell::new(SCROLL_COL, r as u8), true, Marker::ScrollBar);
        }
    }
    if below > 0 {
        let end = PLOT_TOP + PLOT_HEIGHT;
        for r in end - len(below, PLOT_HEIGHT)..end {
            f.set(Cell::new(SCROLL_COL, r as u8), true, Marker::ScrollBar);
        }
    }
}

/// Bresenham cells strictly between two anchors.
pub fn segment_interior(a: Cell, b: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (a.col as i64, a.row as i64);
    let (x1, y1) = (b.col as i64, b.row as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::new();
    loop {
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        if x == x1 && y == y1 {
            break;
        }
        out.push(Cell::new(x as u8, y as u8));
    }
    out
}

fn draw_segment(f: &mut TactileFrame, a: Cell, b: Cell, texture: Texture) {
    for (i, c) in segment_interior(a, b).into_iter().enumerate() {
        if f.marker(c) == Marker::Background && !f.raised(c) {
            f.set_fill(c, texture.line_pin(i));
        }
    }
}

fn bar_cells(anchor: Cell, zero_row: Option<u8>, width: usize) -> Vec<Cell> {
    let base = zero_row.unwrap_or((PLOT_TOP + PLOT_HEIGHT - 1) as u8);
    let (top, bottom) = if anchor.row <= base {
        (anchor.row, base)
    } else {
        (base, anchor.row)
    };
    let last_col = (PLOT_LEFT + PLOT_WIDTH - 1) as u8;
    let cols: Vec<u8> = match width {
        2 if anchor.col < last_col => vec![anchor.col, anchor.col + 1],
        2 => vec![anchor.col - 1, anchor.col],
        _ => vec![anchor.col],
    };
    // Anchor first so the footprint starts at the grid position.
    let mut out = vec![anchor];
    for row in top..=bottom {
        for &col in &cols {
            let c = Cell::new(col, row);
            if c != anchor {
                out.push(c);
            }
        }
    }
    out
}

fn glyph_cells(anchor: Cell, texture: Texture) -> Vec<Cell> {
    let Some((dc, dr)) = texture.glyph_offset() else {
        return vec![anchor];
    };
    let (c, r) = (anchor.col as i64, anchor.row as i64);
    let extra = plot_cell(c + dc, r + dr).or_else(|| plot_cell(c - dc, r - dr));
    std::iter::once(anchor).chain(extra).collect()
}

fn suppress_halo(f: &mut TactileFrame, footprint: &[Cell], taken: &HashSet<Cell>) {
    for c in footprint {
        for dr in -1..=1 {
            for dc in -1..=1 {
                if let Some(n) = plot_cell(c.col as i64 + dc, c.row as i64 + dr) {
                    if !taken.contains(&n) && f.marker(n) == Marker::Background {
                        f.set(n, false, Marker::Background);
                    }
                }
            }
        }
    }
}

/// The element whose grid position is nearest the centre of `cell`; ties go
/// to the smaller id.
pub fn nearest_element(frame: &TactileFrame, cell: Cell) -> Option<&ChartElement> {
    let (cx, cy) = cell.center();
    frame.elements.iter().min_by(|a, b| {
        let d = |e: &ChartElement| {
            let (ex, ey) = e.grid_position.center();
            (ex - cx).powi(2) + (ey - cy).powi(2)
        };
        d(a).total_cmp(&d(b)).then(a.id.cmp(&b.id))
    })
}
