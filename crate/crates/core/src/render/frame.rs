//! Rendered pin frames and their text dump format.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::braille::BrailleLine;
use crate::chart::Value;
use crate::transform::LayerId;

pub const WIDTH: usize = 60;
pub const HEIGHT: usize = 40;

/// A pin position. Column 0 is the left edge, row 0 the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: u8,
    pub row: u8,
}

impl Cell {
    pub const fn new(col: u8, row: u8) -> Self {
        Self { col, row }
    }

    pub fn in_frame(col: i64, row: i64) -> Option<Self> {
        ((0..WIDTH as i64).contains(&col) && (0..HEIGHT as i64).contains(&row)).then(|| Self::new(col as u8, row as u8))
    }

    fn index(self) -> usize {
        self.row as usize * WIDTH + self.col as usize
    }

    /// Continuous coordinates of the pin centre.
    pub fn center(self) -> (f64, f64) {
        (self.col as f64 + 0.5, self.row as f64 + 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    #[default]
    Background,
    XAxis,
    YAxis,
    DataPoint,
    ZeroLine,
    ScrollBar,
}

impl Marker {
    pub fn code(self) -> char {
        match self {
            Marker::Background => '.',
            Marker::XAxis => 'x',
            Marker::YAxis => 'y',
            Marker::DataPoint => 'd',
            Marker::ZeroLine => 'z',
            Marker::ScrollBar => 's',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Some(match c {
            '.' => Marker::Background,
            'x' => Marker::XAxis,
            'y' => Marker::YAxis,
            'd' => Marker::DataPoint,
            'z' => Marker::ZeroLine,
            's' => Marker::ScrollBar,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Datum,
    AxisTick,
    AxisLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Data values behind a rendered mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datum {
    pub x: Value,
    pub y: Value,
    pub series: Option<String>,
    /// Row index in the active table.
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartElement {
    pub id: ElementId,
    pub kind: ElementKind,
    pub grid_position: Cell,
    pub footprint: Vec<Cell>,
    pub datum: Option<Datum>,
    pub axis: Option<Axis>,
    /// Spoken/Braille text for the element.
    pub label: String,
}

/// A 60×40 pin image with per-pin semantics and an index of touchable elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileFrame {
    pub frame_id: u64,
    pins: Vec<bool>,
    semantic: Vec<Marker>,
    /// Raised pins that belong to a structural texture (line segments).
    fill: Vec<bool>,
    pub elements: Vec<ChartElement>,
    pub braille_pages: Vec<BrailleLine>,
    /// No data fell inside the viewport windows.
    pub empty_viewport: bool,
    /// Data hidden because their footprint collided with an earlier mark.
    pub occluded: usize,
    pub layer: Option<LayerId>,
}

impl TactileFrame {
    pub fn blank(frame_id: u64) -> Self {
        Self {
            frame_id,
            pins: vec![false; WIDTH * HEIGHT],
            semantic: vec![Marker::Background; WIDTH * HEIGHT],
            fill: vec![false; WIDTH * HEIGHT],
            elements: Vec::new(),
            braille_pages: Vec::new(),
            empty_viewport: false,
            occluded: 0,
            layer: None,
        }
    }

    pub fn raised(&self, cell: Cell) -> bool {
        self.pins[cell.index()]
    }

    pub fn marker(&self, cell: Cell) -> Marker {
        self.semantic[cell.index()]
    }

    pub fn is_fill(&self, cell: Cell) -> bool {
        self.fill[cell.index()]
    }

    pub fn set(&mut self, cell: Cell, raised: bool, marker: Marker) {
        let i = cell.index();
        self.pins[i] = raised;
        self.semantic[i] = marker;
        self.fill[i] = false;
    }

    pub(crate) fn set_fill(&mut self, cell: Cell, raised: bool) {
        let i = cell.index();
        self.pins[i] = raised;
        self.semantic[i] = Marker::Background;
        self.fill[i] = raised;
    }

    /// Pin states, row-major.
    pub fn pins(&self) -> &[bool] {
        &self.pins
    }

    pub fn cells() -> impl Iterator<Item = Cell> {
        (0..HEIGHT as u8).flat_map(|row| (0..WIDTH as u8).map(move |col| Cell::new(col, row)))
    }

    pub fn element(&self, id: ElementId) -> Option<&ChartElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn data(&self) -> impl Iterator<Item = &ChartElement> {
        self.elements.iter().filter(|e| e.kind == ElementKind::Datum)
    }

    pub fn raised_count(&self) -> usize {
        self.pins.iter().filter(|p| **p).count()
    }

    /// SHA-256 over pins and markers, first 16 hex digits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.pins.iter().map(|&p| p as u8).collect::<Vec<_>>());
        h.update(self.semantic.iter().map(|m| m.code() as u8).collect::<Vec<_>>());
        hex::encode(&h.finalize()[..8])
    }

    /// Text grid: one line per row, `#` raised, `.` lowered.
    pub fn grid_text(&self) -> String {
        let mut s = String::with_capacity((WIDTH + 1) * HEIGHT);
        for row in self.pins.chunks(WIDTH) {
            s.extend(row.iter().map(|&p| if p { '#' } else { '.' }));
            s.push('\n');
        }
        s
    }

    /// Semantic sidecar: one marker code per pin, then one line per element.
    pub fn sidecar_text(&self) -> String {
        let mut s = String::with_capacity((WIDTH + 1) * HEIGHT);
        for row in self.semantic.chunks(WIDTH) {
            s.extend(row.iter().map(|m| m.code()));
            s.push('\n');
        }
        for e in &self.elements {
            let kind = match e.kind {
                ElementKind::Datum => "datum",
                ElementKind::AxisTick => "tick",
                ElementKind::AxisLabel => "label",
            };
            let _ = writeln!(
                s,
                "{} {} {},{} {}",
                e.id.0, kind, e.grid_position.col, e.grid_position.row, e.label
            );
        }
        s
    }

    /// Parse a grid dump back into pin states.
    pub fn parse_grid(text: &str) -> Option<Vec<bool>> {
        let rows: Vec<&str> = text.lines().collect();
        if rows.len() != HEIGHT || rows.iter().any(|r| r.chars().count() != WIDTH) {
            return None;
        }
        rows.iter()
            .flat_map(|r| r.chars())
            .map(|c| match c {
                '#' => Some(true),
                '.' => Some(false),
                _ => None,
            })
            .collect()
    }
}
