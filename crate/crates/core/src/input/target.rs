//! Gaussian target inference over a frame's element index.

use serde::{Deserialize, Serialize};

use crate::render::{ElementId, TactileFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub element: ElementId,
    pub probability: f64,
}

/// A scored candidate: element, distance in pins, normalised probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub element: ElementId,
    pub distance: f64,
    pub probability: f64,
}

/// Score every element whose grid position (pin centre) lies within `radius`
/// of `point` by exp(-d²/2σ²), normalised over the candidates. Computed in
/// log space so small σ does not underflow. Sorted best first: higher
/// probability, then smaller distance, then smaller id.
pub fn score_candidates(point: (f64, f64), frame: &TactileFrame, sigma: f64, radius: f64) -> Vec<Candidate> {
    let mut cands: Vec<(ElementId, f64)> = frame
        .elements
        .iter()
        .filter_map(|e| {
            let (cx, cy) = e.grid_position.center();
            let d = ((cx - point.0).powi(2) + (cy - point.1).powi(2)).sqrt();
            (d <= radius).then_some((e.id, d))
        })
        .collect();
    if cands.is_empty() {
        return Vec::new();
    }
    let logw: Vec<f64> = cands.iter().map(|(_, d)| -d * d / (2.0 * sigma * sigma)).collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max + logw.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let mut out: Vec<Candidate> = cands
        .drain(..)
        .zip(logw)
        .map(|((element, distance), l)| Candidate {
            element,
            distance,
            probability: (l - log_sum).exp(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(a.distance.total_cmp(&b.distance))
            .then(a.element.cmp(&b.element))
    });
    out
}

/// The most likely element under the contact point, if any lies in range.
pub fn infer_target(point: (f64, f64), frame: &TactileFrame, sigma: f64, radius: f64) -> Option<Target> {
    score_candidates(point, frame, sigma, radius).first().map(|c| Target {
        element: c.element,
        probability: c.probability,
    })
}
