//! Chunk playback on a virtual clock.

use serde::{Deserialize, Serialize};

use super::{speech_duration, ResponseChunk};
use crate::input::{Action, ButtonAction};
use crate::render::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaybackKind {
    Highlight,
    Speech,
    Clear,
}

/// One line of the playback log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybackEvent {
    pub t: u64,
    pub kind: PlaybackKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<Cell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaybackControl {
    Next,
    Previous,
    Repeat,
    Stop,
}

impl PlaybackControl {
    /// Playback meaning of a button action: quick Right/Left navigate,
    /// hold F3 repeats, hold F2 stops.
    pub fn from_action(a: Action) -> Option<Self> {
        match a {
            Action::PageRight => Some(Self::Next),
            Action::PageLeft => Some(Self::Previous),
            Action::Repeat => Some(Self::Repeat),
            Action::Stop => Some(Self::Stop),
            _ => None,
        }
    }
}

fn issue(log: &mut Vec<PlaybackEvent>, chunks: &[ResponseChunk], i: usize, t: u64) -> u64 {
    let c = &chunks[i];
    if let Some(h) = &c.highlight {
        log.push(PlaybackEvent {
            t,
            kind: PlaybackKind::Highlight,
            chunk: Some(i),
            cells: Some(h.cells.clone()),
            text: None,
        });
    }
    log.push(PlaybackEvent {
        t,
        kind: PlaybackKind::Speech,
        chunk: Some(i),
        cells: None,
        text: Some(c.text.trim().to_string()),
    });
    t + speech_duration(c.text.trim()).max(1)
}

fn clear(log: &mut Vec<PlaybackEvent>, t: u64) {
    log.push(PlaybackEvent {
        t,
        kind: PlaybackKind::Clear,
        chunk: None,
        cells: None,
        text: None,
    });
}

/// Play `chunks` from `start`: each chunk issues its highlight then its
/// speech, and the next chunk follows when the speech ends. Controls at or
/// after `start` interrupt the current chunk. Playback ends with a clear.
pub fn play(chunks: &[ResponseChunk], controls: &[(u64, PlaybackControl)], start: u64) -> Vec<PlaybackEvent> {
    let mut log = Vec::new();
    if chunks.is_empty() {
        return log;
    }
    let mut controls: Vec<(u64, PlaybackControl)> = controls.iter().copied().filter(|(t, _)| *t >= start).collect();
    controls.sort_by_key(|(t, _)| *t);
    let mut pending = controls.into_iter().peekable();
    let mut cur = 0;
    let mut ends = issue(&mut log, chunks, cur, start);
    loop {
        match pending.peek().copied() {
            Some((t, ctl)) if t < ends => {
                pending.next();
                let target = match ctl {
                    PlaybackControl::Stop => {
                        clear(&mut log, t);
                        return log;
                    }
                    PlaybackControl::Next if cur + 1 >= chunks.len() => {
                        clear(&mut log, t);
                        return log;
                    }
                    PlaybackControl::Next => cur + 1,
                    PlaybackControl::Previous => cur.saturating_sub(1),
                    PlaybackControl::Repeat => cur,
                };
                cur = target;
                ends = issue(&mut log, chunks, cur, t);
            }
            _ => {
                if cur + 1 >= chunks.len() {
                    clear(&mut log, ends);
                    return log;
                }
                cur += 1;
                ends = issue(&mut log, chunks, cur, ends);
            }
        }
    }
}

/// Controls from classified button actions.
pub fn controls_from_actions(actions: &[ButtonAction]) -> Vec<(u64, PlaybackControl)> {
    actions
        .iter()
        .filter_map(|a| PlaybackControl::from_action(a.action).map(|c| (a.t, c)))
        .collect()
}
