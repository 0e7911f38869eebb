//! Deictic reference scoring and touch-context fusion.

use serde::{Deserialize, Serialize};

use crate::input::TouchContext;

pub const FUSION_THRESHOLD: f64 = 0.40;

/// Marker phrases and their lexical weights. Longer phrases are matched
/// first and consume their words, so "this period" does not also count as
/// "this".
pub const MARKERS: [(&str, f64); 16] = [
    ("between these", 0.95),
    ("between here and here", 0.95),
    ("this period", 0.85),
    ("this point", 0.85),
    ("this bar", 0.85),
    ("this value", 0.85),
    ("this range", 0.85),
    ("these points", 0.85),
    ("these values", 0.85),
    ("these two", 0.85),
    ("these", 0.7),
    ("here", 0.6),
    ("this", 0.5),
    ("that point", 0.6),
    ("that", 0.3),
    ("there", 0.3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deixis {
    /// Markers found, in text order.
    pub markers: Vec<String>,
    /// Combined lexical score in [0, 1].
    pub lexical: f64,
    /// Lexical score scaled by touch recency and probability.
    pub confidence: f64,
    /// The transcript, with the touch suffix when fused.
    pub augmented: String,
    pub fused: bool,
    /// A deictic question arrived with nothing touched.
    pub needs_clarification: bool,
}

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

/// Markers in `text`, longest match first at each position.
pub fn find_markers(text: &str) -> Vec<(&'static str, f64)> {
    let w = words(text);
    let mut phrases: Vec<(Vec<&str>, &'static str, f64)> = MARKERS
        .iter()
        .map(|(p, weight)| (p.split(' ').collect(), *p, *weight))
        .collect();
    phrases.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
    let mut out = Vec::new();
    let mut i = 0;
    while i < w.len() {
        let hit = phrases
            .iter()
            .find(|(p, _, _)| i + p.len() <= w.len() && p.iter().zip(&w[i..]).all(|(a, b)| *a == b));
        match hit {
            Some((p, name, weight)) => {
                out.push((*name, *weight));
                i += p.len();
            }
            None => i += 1,
        }
    }
    out
}

/// Noisy-or of the marker weights.
pub fn lexical_score(text: &str) -> f64 {
    1.0 - find_markers(text).iter().map(|(_, w)| 1.0 - w).product::<f64>()
}

/// Recency-weighted touch strength in [0, 1]: for each live selection,
/// its probability times the remaining share of its time to live; the
/// strongest selection counts.
pub fn touch_strength(ctx: &TouchContext, now: u64) -> f64 {
    ctx.selections()
        .iter()
        .filter(|s| now <= s.expires)
        .map(|s| {
            let ttl = s.expires.saturating_sub(s.t).max(1) as f64;
            let age = now.saturating_sub(s.t) as f64;
            s.probability.clamp(0.0, 1.0) * (1.0 - age / ttl).clamp(0.0, 1.0)
        })
        .fold(0.0, f64::max)
}

/// "(touched: point_A {...}; point_B {...})"
pub fn touch_suffix(ctx: &TouchContext) -> String {
    let parts: Vec<String> = ctx
        .selections()
        .iter()
        .enumerate()
        .map(|(i, s)| s.describe(&point_name(i)))
        .collect();
    format!("(touched: {})", parts.join("; "))
}

/// point_A, point_B, ..., point_Z, point_AA, ...
pub fn point_name(i: usize) -> String {
    let mut n = i;
    let mut s = Vec::new();
    loop {
        s.push(b'A' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s.reverse();
    format!("point_{}", String::from_utf8(s).unwrap_or_default())
}

/// Score `transcript` against the touch context at `now` and fuse when the
/// confidence reaches the threshold. Confidence is the lexical score times
/// (0.5 + 0.5 * touch strength) with live selections, and 0 without.
pub fn classify_deictic(transcript: &str, ctx: &TouchContext, now: u64) -> Deixis {
    let markers = find_markers(transcript);
    let lexical = 1.0 - markers.iter().map(|(_, w)| 1.0 - w).product::<f64>();
    let live = ctx.live(now);
    let confidence = if live.is_empty() {
        0.0
    } else {
        lexical * (0.5 + 0.5 * touch_strength(&live, now))
    };
    let fused = !live.is_empty() && confidence >= FUSION_THRESHOLD;
    let augmented = if fused {
        format!("{} {}", transcript.trim_end(), touch_suffix(&live))
    } else {
        transcript.to_string()
    };
    Deixis {
        markers: markers.iter().map(|(m, _)| m.to_string()).collect(),
        lexical,
        confidence,
        augmented,
        fused,
        needs_clarification: live.is_empty() && lexical >= FUSION_THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_marker_wins() {
        let m: Vec<&str> = find_markers("What happened during this period?")
            .iter()
            .map(|m| m.0)
            .collect();
        assert_eq!(m, ["this period"]);
        let m: Vec<&str> = find_markers("compare between these and here")
            .iter()
            .map(|m| m.0)
            .collect();
        assert_eq!(m, ["between these", "here"]);
    }

    #[test]
    fn no_markers_scores_zero() {
        assert_eq!(lexical_score("What is the maximum interest rate?"), 0.0);
        // Substrings inside words do not count.
        assert!((lexical_score("Is there a thistle?") - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_context_is_identity() {
        let ctx = TouchContext::default();
        let d = classify_deictic("What happened here?", &ctx, 0);
        assert_eq!(d.augmented, "What happened here?");
        assert!(!d.fused);
        assert!(d.needs_clarification);
        assert!(!classify_deictic("What is the mean?", &ctx, 0).needs_clarification);
    }

    #[test]
    fn names_run_past_z() {
        assert_eq!(point_name(0), "point_A");
        assert_eq!(point_name(25), "point_Z");
        assert_eq!(point_name(26), "point_AA");
    }
}
