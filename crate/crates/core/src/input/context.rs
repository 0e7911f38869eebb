//! Cached selections that ground deictic queries.

use serde::{Deserialize, Serialize};

use super::gesture::Finger;
use crate::chart::{LoadedChart, Value};
use crate::render::{Cell, ChartElement, Datum, ElementId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub finger: Finger,
    pub element: ElementId,
    pub frame_id: u64,
    pub datum: Datum,
    /// Field/value pairs as spoken in queries, e.g. ("interest", "0.25%").
    pub fields: Vec<(String, String)>,
    /// Spoken label of the element.
    pub label: String,
    pub cell: Cell,
    pub probability: f64,
    pub t: u64,
    pub expires: u64,
}

impl Selection {
    /// Build a selection for a datum element of `chart`.
    pub fn new(
        chart: &LoadedChart,
        element: &ChartElement,
        frame_id: u64,
        finger: Finger,
        probability: f64,
        t: u64,
        ttl_ms: u64,
    ) -> Option<Self> {
        let datum = element.datum.clone()?;
        Some(Self {
            finger,
            element: element.id,
            frame_id,
            fields: field_pairs(chart, &datum),
            datum,
            label: element.label.clone(),
            cell: element.grid_position,
            probability,
            t,
            expires: t + ttl_ms,
        })
    }

    /// "point_A {quarter=2020-Q2, interest=0.25%}"
    pub fn describe(&self, name: &str) -> String {
        let pairs: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{name} {{{}}}", pairs.join(", "))
    }
}

fn field_pairs(chart: &LoadedChart, d: &Datum) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let (Some(s), Some(v)) = (&chart.spec.series, &d.series) {
        out.push((s.field.clone(), v.clone()));
    }
    let x = match &d.x {
        Value::Number(n) => crate::chart::value::format_number(
            *n,
            chart
                .spec
                .x
                .decimals
                .or_else(|| chart.table.column(&chart.spec.x.field).map(|c| c.decimals))
                .unwrap_or(0),
        ),
        v => v.label(0),
    };
    out.push((chart.spec.x.field.clone(), x));
    let y = match &d.y {
        Value::Number(n) => chart.format_y(*n),
        v => v.label(0),
    };
    out.push((chart.spec.y.field.clone(), y));
    out
}

/// One live selection per finger, in the order they were made.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TouchContext {
    selections: Vec<Selection>,
}

impl TouchContext {
    /// Record a selection, replacing the finger's previous one.
    pub fn cache(&mut self, sel: Selection) {
        self.selections.retain(|s| s.finger != sel.finger);
        self.selections.push(sel);
        self.selections.sort_by_key(|s| s.t);
    }

    /// Drop selections that expired before `now`.
    pub fn prune(&mut self, now: u64) {
        self.selections.retain(|s| now <= s.expires);
    }

    /// Snapshot of live selections at `now`.
    pub fn live(&self, now: u64) -> TouchContext {
        TouchContext {
            selections: self.selections.iter().filter(|s| now <= s.expires).cloned().collect(),
        }
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    pub fn clear(&mut self) {
        self.selections.clear();
    }

    /// Keep only selections made on `frame_id`; element ids are per frame.
    pub fn retain_frame(&mut self, frame_id: u64) {
        self.selections.retain(|s| s.frame_id == frame_id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render, ViewportState, PLOT_WIDTH};
    use std::path::Path;

    fn setup() -> (LoadedChart, crate::render::TactileFrame) {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/catalogue/interest_rates.vl.json");
        let c = LoadedChart::from_path(&p).unwrap();
        let f = render(&c, &ViewportState::initial(&c, PLOT_WIDTH), 1).unwrap();
        (c, f)
    }

    #[test]
    fn selection_fields_match_query_form() {
        let (c, f) = setup();
        let first = f.data().next().unwrap();
        let s = Selection::new(&c, first, 1, Finger::LeftIndex, 0.9, 0, 30_000).unwrap();
        assert_eq!(s.describe("point_A"), "point_A {quarter=2020-Q2, interest=0.25%}");
    }

    #[test]
    fn same_finger_replaces_and_ttl_expires() {
        let (c, f) = setup();
        let data: Vec<_> = f.data().collect();
        let mut ctx = TouchContext::default();
        ctx.cache(Selection::new(&c, data[0], 1, Finger::LeftIndex, 1.0, 0, 30_000).unwrap());
        ctx.cache(Selection::new(&c, data[3], 1, Finger::LeftIndex, 1.0, 100, 30_000).unwrap());
        assert_eq!(ctx.selections().len(), 1);
        assert_eq!(ctx.selections()[0].element, data[3].id);
        ctx.cache(Selection::new(&c, data[5], 1, Finger::RightIndex, 1.0, 200, 30_000).unwrap());
        assert_eq!(ctx.live(30_100).selections().len(), 2);
        assert!(ctx.live(31_200).is_empty());
    }
}
