//! Viewport state: domain windows, magnification, and the active resolution layer.

use serde::{Deserialize, Serialize};

use crate::chart::{FieldDef, FieldType, LoadedChart, Mark, ScaleDomain, Value};
use crate::transform::LayerId;

/// Fraction of the window span moved by one pan step.
pub const PAN_FRACTION: f64 = 0.25;
pub const MAX_MAGNIFICATION: f64 = 64.0;

/// Maps a channel's values to a continuous domain position.
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Linear,
    /// Days since the epoch.
    Time,
    /// Category index.
    Band(Vec<String>),
}

impl Scale {
    pub fn for_field(def: &FieldDef, chart: &LoadedChart) -> Self {
        match def.ty {
            FieldType::Quantitative => Scale::Linear,
            FieldType::Temporal => Scale::Time,
            FieldType::Ordinal | FieldType::Nominal => {
                if let Some(ScaleDomain::Categories(c)) = &def.scale {
                    return Scale::Band(c.clone());
                }
                let mut values: Vec<Value> = Vec::new();
                if let Some(vals) = chart.table.values(&def.field) {
                    for v in vals {
                        if !v.is_null() && !values.contains(v) {
                            values.push(v.clone());
                        }
                    }
                }
                if def.ty == FieldType::Ordinal {
                    values.sort_by(|a, b| a.total_cmp(b));
                }
                Scale::Band(values.iter().map(|v| v.label(0)).collect())
            }
        }
    }

    pub fn position(&self, v: &Value) -> Option<f64> {
        match (self, v) {
            (Scale::Linear, Value::Number(n)) if n.is_finite() => Some(*n),
            (Scale::Time, Value::Time(t)) => Some(t.day as f64),
            (Scale::Band(cats), v) if !v.is_null() => {
                let label = v.label(0);
                cats.iter().position(|c| *c == label).map(|i| i as f64)
            }
            _ => None,
        }
    }

    pub fn is_band(&self) -> bool {
        matches!(self, Scale::Band(_))
    }
}

/// Scales for both position channels of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub x: Scale,
    pub y: Scale,
}

impl Axes {
    pub fn for_chart(chart: &LoadedChart) -> Self {
        Self {
            x: Scale::for_field(&chart.spec.x, chart),
            y: Scale::for_field(&chart.spec.y, chart),
        }
    }
}

pub type Window = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanDirection {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoomMode {
    GeometricIn,
    GeometricOut,
    SemanticIn,
    SemanticOut,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ViewportError {
    #[error("already at the finest resolution")]
    NoFinerLayer,
    #[error("already at the coarsest resolution")]
    NoCoarserLayer,
    #[error("this chart has no resolution layers")]
    NoHierarchy,
    #[error("already at maximum magnification")]
    MaxMagnification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewportState {
    pub x_window: Window,
    pub y_window: Window,
    pub magnification: f64,
    /// `None` renders the base table.
    pub active_layer: Option<LayerId>,
}

impl ViewportState {
    pub fn is_valid(&self) -> bool {
        let ok = |(lo, hi): Window| lo.is_finite() && hi.is_finite() && lo < hi;
        ok(self.x_window) && ok(self.y_window) && self.magnification >= 1.0
    }

    /// Full-extent view with the layer chosen by [`select_layer`].
    pub fn initial(chart: &LoadedChart, plot_width: usize) -> Self {
        let (x_window, y_window) = data_extent(chart);
        let mut vp = Self {
            x_window,
            y_window,
            magnification: 1.0,
            active_layer: None,
        };
        vp.active_layer = select_layer(chart, vp.x_window, plot_width);
        vp
    }

    pub fn pan(&self, chart: &LoadedChart, dir: PanDirection) -> Self {
        let (xe, ye) = data_extent(chart);
        let mut next = self.clone();
        match dir {
            PanDirection::Left => next.x_window = shift(self.x_window, xe, -1.0),
            PanDirection::Right => next.x_window = shift(self.x_window, xe, 1.0),
            PanDirection::Down => next.y_window = shift(self.y_window, ye, -1.0),
            PanDirection::Up => next.y_window = shift(self.y_window, ye, 1.0),
        }
        next
    }

    /// Geometric modes rescale the x window about its centre and then
    /// re-select the layer; semantic modes step one layer.
    pub fn zoom(&self, chart: &LoadedChart, mode: ZoomMode, plot_width: usize) -> Result<Self, ViewportError> {
        let (xe, _) = data_extent(chart);
        let mut next = self.clone();
        let (lo, hi) = self.x_window;
        let center = (lo + hi) / 2.0;
        let span = hi - lo;
        match mode {
            ZoomMode::GeometricIn => {
                if self.magnification >= MAX_MAGNIFICATION {
                    return Err(ViewportError::MaxMagnification);
                }
                next.x_window = (center - span / 4.0, center + span / 4.0);
                next.magnification = self.magnification * 2.0;
            }
            ZoomMode::GeometricOut => {
                next.x_window = clamp((center - span, center + span), xe);
                next.magnification = (self.magnification / 2.0).max(1.0);
                if next.x_window == xe {
                    next.magnification = 1.0;
                }
            }
            ZoomMode::SemanticIn | ZoomMode::SemanticOut => {
                let ids = chart.layer_ids();
                if ids.is_empty() {
                    return Err(ViewportError::NoHierarchy);
                }
                let cur = self
                    .active_layer
                    .and_then(|id| ids.iter().position(|l| *l == id))
                    .unwrap_or(ids.len() - 1);
                let idx = if mode == ZoomMode::SemanticIn {
                    (cur + 1 < ids.len())
                        .then_some(cur + 1)
                        .ok_or(ViewportError::NoFinerLayer)?
                } else {
                    cur.checked_sub(1).ok_or(ViewportError::NoCoarserLayer)?
                };
                next.active_layer = Some(ids[idx]);
                return Ok(next);
            }
        }
        if !chart.layers.is_empty() {
            next.active_layer = select_layer(chart, next.x_window, plot_width);
        }
        Ok(next)
    }
}

fn shift(w: Window, extent: Window, sign: f64) -> Window {
    let span = w.1 - w.0;
    if span >= extent.1 - extent.0 {
        return w;
    }
    let d = sign * span * PAN_FRACTION;
    clamp((w.0 + d, w.1 + d), extent)
}

/// Move `w` inside `extent` without changing its span, or return the extent
/// if the window is at least as wide.
fn clamp(w: Window, extent: Window) -> Window {
    let span = w.1 - w.0;
    if span >= extent.1 - extent.0 {
        return extent;
    }
    if w.0 < extent.0 {
        (extent.0, extent.0 + span)
    } else if w.1 > extent.1 {
        (extent.1 - span, extent.1)
    } else {
        w
    }
}

/// Domain extent of the chart across the base table and every layer, so
/// windows stay put when the layer changes. Degenerate extents are padded;
/// bar charts always include zero on y; explicit scale ranges win.
pub fn data_extent(chart: &LoadedChart) -> (Window, Window) {
    let axes = Axes::for_chart(chart);
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    let tables = std::iter::once(&chart.table).chain(chart.layers.iter().map(|l| &l.table));
    for t in tables {
        let (Some(xi), Some(yi)) = (t.column_index(&chart.spec.x.field), t.column_index(&chart.spec.y.field)) else {
            continue;
        };
        for row in t.rows() {
            if let (Some(x), Some(y)) = (axes.x.position(&row[xi]), axes.y.position(&row[yi])) {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
    }
    if let Scale::Band(c) = &axes.x {
        if !c.is_empty() {
            xs = (0.0, (c.len() - 1) as f64);
        }
    }
    if chart.spec.mark == Mark::Bar {
        ys = (ys.0.min(0.0), ys.1.max(0.0));
    }
    let explicit = |def: &FieldDef, scale: &Scale, w: Window| match &def.scale {
        Some(ScaleDomain::Range { min, max }) => match (scale.position(min), scale.position(max)) {
            (Some(a), Some(b)) if a < b => (a, b),
            _ => w,
        },
        _ => w,
    };
    (
        pad(explicit(&chart.spec.x, &axes.x, xs)),
        pad(explicit(&chart.spec.y, &axes.y, ys)),
    )
}

fn pad(w: Window) -> Window {
    if !w.0.is_finite() || !w.1.is_finite() {
        return (0.0, 1.0);
    }
    if w.0 < w.1 {
        return w;
    }
    let d = if w.0 == 0.0 { 1.0 } else { w.0.abs() * 0.5 };
    (w.0 - d, w.1 + d)
}

/// Points of a layer (or the base table) whose x falls inside the window.
pub fn in_window_count(chart: &LoadedChart, layer: Option<LayerId>, x_window: Window) -> usize {
    let axes = Axes::for_chart(chart);
    let t = chart.table_for(layer);
    let Some(xi) = t.column_index(&chart.spec.x.field) else {
        return 0;
    };
    t.rows()
        .iter()
        .filter_map(|r| axes.x.position(&r[xi]))
        .filter(|&x| x >= x_window.0 && x <= x_window.1)
        .count()
}

/// The finest layer with at most `plot_width` in-window points, or the
/// coarsest if none qualifies. `None` when the chart has no hierarchy.
pub fn select_layer(chart: &LoadedChart, x_window: Window, plot_width: usize) -> Option<LayerId> {
    let ids = chart.layer_ids();
    ids.iter()
        .rev()
        .find(|&&id| in_window_count(chart, Some(id), x_window) <= plot_width)
        .or(ids.first())
        .copied()
}
