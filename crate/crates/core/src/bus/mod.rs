//! In-process topic bus with per-topic sequence numbers and one ordered
//! queue per subscriber. No retained messages: late subscribers only see
//! what is published after they subscribe.

pub mod bridge;

use std::collections::HashMap;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, Weak};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

pub use bridge::{Bridge, BridgeError};

pub const VIS_CATALOGUE: &str = "vis/catalogue";
pub const USER_QUERY: &str = "user/query";
pub const AGENT_RESPONSE: &str = "agent/response";
pub const AGENT_COMMAND: &str = "agent/command";
pub const DEVICE_FRAME: &str = "device/frame";
pub const SESSION_EVENT: &str = "session/event";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    String,
    Number,
    Array,
    Object,
}

impl Kind {
    fn check(self, v: &Json) -> bool {
        match self {
            Kind::String => v.is_string(),
            Kind::Number => v.is_number(),
            Kind::Array => v.is_array(),
            Kind::Object => v.is_object(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::String => "string",
            Kind::Number => "number",
            Kind::Array => "array",
            Kind::Object => "object",
        }
    }
}

/// Declared topics and the fields their payloads must carry.
pub const TOPICS: [(&str, &[(&str, Kind)]); 6] = [
    (VIS_CATALOGUE, &[("charts", Kind::Array)]),
    (USER_QUERY, &[("transcript", Kind::String)]),
    (
        AGENT_RESPONSE,
        &[("text", Kind::String), ("referenced_elements", Kind::Array)],
    ),
    (AGENT_COMMAND, &[("command", Kind::String)]),
    (DEVICE_FRAME, &[("frame_id", Kind::Number), ("pins", Kind::String)]),
    (SESSION_EVENT, &[("kind", Kind::String)]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub topic: String,
    pub seq: u64,
    /// Milliseconds; wall clock for live sessions, virtual time in replay.
    pub timestamp: u64,
    pub payload: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BusError {
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("payload for {topic} violates its schema: {reason}")]
    SchemaViolation { topic: String, reason: String },
    #[error("invalid subscription pattern {0:?}")]
    InvalidPattern(String),
}

/// Check `payload` against the schema of `topic`.
pub fn validate(topic: &str, payload: &Json) -> Result<(), BusError> {
    let (_, fields) = TOPICS
        .iter()
        .find(|(t, _)| *t == topic)
        .ok_or_else(|| BusError::UnknownTopic(topic.to_string()))?;
    let violation = |reason: String| BusError::SchemaViolation {
        topic: topic.to_string(),
        reason,
    };
    let obj = payload
        .as_object()
        .ok_or_else(|| violation("payload is not an object".into()))?;
    for (name, kind) in fields.iter() {
        match obj.get(*name) {
            None => return Err(violation(format!("missing field {name:?}"))),
            Some(v) if !kind.check(v) => return Err(violation(format!("field {name:?} must be a {}", kind.name()))),
            _ => {}
        }
    }
    if topic == USER_QUERY && obj["transcript"].as_str().is_some_and(|s| s.trim().is_empty()) {
        return Err(violation("transcript is empty".into()));
    }
    Ok(())
}

/// Does `pattern` (exact, or `+` for one whole level) match `topic`?
pub fn matches(pattern: &str, topic: &str) -> bool {
    let p: Vec<&str> = pattern.split('/').collect();
    let t: Vec<&str> = topic.split('/').collect();
    p.len() == t.len() && p.iter().zip(&t).all(|(a, b)| *a == "+" || a == b)
}

fn check_pattern(pattern: &str) -> Result<(), BusError> {
    let invalid = || BusError::InvalidPattern(pattern.to_string());
    if pattern
        .split('/')
        .any(|s| s.is_empty() || (s.contains('+') && s != "+") || s.contains('#'))
    {
        return Err(invalid());
    }
    if !TOPICS.iter().any(|(t, _)| matches(pattern, t)) {
        return Err(invalid());
    }
    Ok(())
}

struct Subscriber {
    id: u64,
    pattern: String,
    tx: Sender<Envelope>,
}

type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

struct Inner {
    seqs: HashMap<String, u64>,
    subs: Vec<Subscriber>,
    next_id: u64,
}

/// Cheap to clone; all clones share one bus.
#[derive(Clone)]
pub struct Bus {
    inner: Arc<Mutex<Inner>>,
    clock: Clock,
}

impl std::fmt::Debug for Bus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.lock();
        f.debug_struct("Bus")
            .field("subscribers", &inner.subs.len())
            .field("seqs", &inner.seqs)
            .finish()
    }
}

impl Default for Bus {
    fn default() -> Self {
        Self::new()
    }
}

fn wall_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl Bus {
    /// A bus stamping envelopes with wall-clock milliseconds.
    pub fn new() -> Self {
        Self::with_clock(Arc::new(wall_ms))
    }

    /// A bus stamping envelopes from `clock`, e.g. a replay's virtual time.
    pub fn with_clock(clock: Clock) -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                seqs: HashMap::new(),
                subs: Vec::new(),
                next_id: 0,
            })),
            clock,
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // A panicking subscriber thread cannot leave Inner half-updated.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn publish(&self, topic: &str, payload: Json) -> Result<u64, BusError> {
        let t = (self.clock)();
        self.publish_at(topic, payload, t)
    }

    /// Publish with an explicit timestamp. Returns the envelope's seq.
    pub fn publish_at(&self, topic: &str, payload: Json, timestamp: u64) -> Result<u64, BusError> {
        validate(topic, &payload)?;
        let mut inner = self.lock();
        let seq = {
            let s = inner.seqs.entry(topic.to_string()).or_insert(0);
            *s += 1;
            *s
        };
        let env = Envelope {
            topic: topic.to_string(),
            seq,
            timestamp,
            payload,
        };
        // Sending under the lock keeps per-topic order identical for all
        // subscribers. Receivers that went away are pruned.
        inner
            .subs
            .retain(|s| !matches(&s.pattern, topic) || s.tx.send(env.clone()).is_ok());
        Ok(seq)
    }

    /// Last seq issued on `topic` (0 if none).
    pub fn last_seq(&self, topic: &str) -> u64 {
        self.lock().seqs.get(topic).copied().unwrap_or(0)
    }

    pub fn subscribe(&self, pattern: &str) -> Result<Subscription, BusError> {
        check_pattern(pattern)?;
        let (tx, rx) = mpsc::channel();
        let mut inner = self.lock();
        let id = inner.next_id;
        inner.next_id += 1;
        inner.subs.push(Subscriber {
            id,
            pattern: pattern.to_string(),
            tx,
        });
        Ok(Subscription {
            id,
            pattern: pattern.to_string(),
            rx,
            bus: Arc::downgrade(&self.inner),
        })
    }

    pub fn subscriber_count(&self) -> usize {
        self.lock().subs.len()
    }
}

/// A live subscription. Dropping it unsubscribes.
#[derive(Debug)]
pub struct Subscription {
    id: u64,
    pub pattern: String,
    rx: Receiver<Envelope>,
    bus: Weak<Mutex<Inner>>,
}

impl Subscription {
    pub fn recv(&self) -> Option<Envelope> {
        self.rx.recv().ok()
    }

    pub fn recv_timeout(&self, d: Duration) -> Option<Envelope> {
        self.rx.recv_timeout(d).ok()
    }

    pub fn try_recv(&self) -> Option<Envelope> {
        self.rx.try_recv().ok()
    }

    /// Everything queued right now.
    pub fn drain(&self) -> Vec<Envelope> {
        std::iter::from_fn(|| self.try_recv()).collect()
    }

    /// Stop delivery. Nothing published after this returns is queued.
    pub fn unsubscribe(self) {}

    fn detach(&self) {
        if let Some(inner) = self.bus.upgrade() {
            let mut inner = inner.lock().unwrap_or_else(|e| e.into_inner());
            inner.subs.retain(|s| s.id != self.id);
        }
    }
}

impl Drop for Subscription {
    fn drop(&mut self) {
        self.detach();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn bus() -> Bus {
        Bus::with_clock(Arc::new(|| 7))
    }

    #[test]
    fn per_topic_order_and_seq() {
        let b = bus();
        let s = b.subscribe("+/+").unwrap();
        assert_eq!(b.publish(USER_QUERY, json!({"transcript": "hi"})).unwrap(), 1);
        b.publish(AGENT_RESPONSE, json!({"text": "a", "referenced_elements": []}))
            .unwrap();
        assert_eq!(b.publish(USER_QUERY, json!({"transcript": "again"})).unwrap(), 2);
        let got = s.drain();
        assert_eq!(got.len(), 3);
        let q: Vec<u64> = got.iter().filter(|e| e.topic == USER_QUERY).map(|e| e.seq).collect();
        assert_eq!(q, [1, 2]);
        assert_eq!(got[0].timestamp, 7);
    }

    #[test]
    fn unknown_topic_and_schema() {
        let b = bus();
        assert_eq!(
            b.publish("user/shout", json!({})),
            Err(BusError::UnknownTopic("user/shout".into()))
        );
        assert!(matches!(
            b.publish(USER_QUERY, json!({"transcript": 3})),
            Err(BusError::SchemaViolation { .. })
        ));
        assert!(matches!(
            b.publish(USER_QUERY, json!({"transcript": "  "})),
            Err(BusError::SchemaViolation { .. })
        ));
        assert_eq!(b.last_seq(USER_QUERY), 0);
    }

    #[test]
    fn wildcard_matches_one_level() {
        let b = bus();
        let s = b.subscribe("agent/+").unwrap();
        b.publish(AGENT_RESPONSE, json!({"text": "a", "referenced_elements": []}))
            .unwrap();
        b.publish(AGENT_COMMAND, json!({"command": "highlight"})).unwrap();
        b.publish(USER_QUERY, json!({"transcript": "x"})).unwrap();
        let topics: Vec<String> = s.drain().into_iter().map(|e| e.topic).collect();
        assert_eq!(topics, [AGENT_RESPONSE, AGENT_COMMAND]);
    }

    #[test]
    fn invalid_patterns() {
        let b = bus();
        for p in ["agent/", "agent/res+", "#", "agent/#", "nothing/here", "+"] {
            assert!(matches!(b.subscribe(p), Err(BusError::InvalidPattern(_))), "{p}");
        }
    }

    #[test]
    fn unsubscribe_and_late_subscribers() {
        let b = bus();
        b.publish(SESSION_EVENT, json!({"kind": "early"})).unwrap();
        let s = b.subscribe(SESSION_EVENT).unwrap();
        assert!(s.try_recv().is_none());
        b.publish(SESSION_EVENT, json!({"kind": "one"})).unwrap();
        assert_eq!(b.subscriber_count(), 1);
        let first = s.try_recv().unwrap();
        assert_eq!(first.seq, 2);
        s.unsubscribe();
        assert_eq!(b.subscriber_count(), 0);
        b.publish(SESSION_EVENT, json!({"kind": "two"})).unwrap();
    }
}
