//! Optional external model port. The planner always runs; a port can only
//! override the routed intent and propose answer text whose cited numbers
//! survive re-verification. Schema in docs/wire.md.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::calc::Task;
use super::router::{Intent, Operation};

pub const MODEL_URL_ENV: &str = "FEELGRID_MODEL_URL";
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSelection {
    pub name: String,
    pub fields: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortChart {
    pub name: String,
    pub title: Option<String>,
    pub mark: String,
    pub row_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortRequest {
    pub version: u32,
    pub transcript: String,
    pub augmented: String,
    pub chart: Option<String>,
    pub schema: Vec<PortColumn>,
    pub selections: Vec<PortSelection>,
    pub catalogue: Vec<PortChart>,
}

/// A number the model's answer relies on, tagged with the task that
/// should reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedValue {
    pub task: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortIntent {
    pub category: String,
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub operation: Option<Operation>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PortReply {
    #[serde(default)]
    pub intent: Option<PortIntent>,
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub cited_values: Vec<CitedValue>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PortError {
    #[error("model port timed out")]
    PortTimeout,
    #[error("model port reply does not match the schema: {0}")]
    PortSchemaError(String),
    #[error("model port transport failed: {0}")]
    Transport(String),
}

pub trait ModelPort: Send + Sync {
    fn ask(&self, request: &PortRequest) -> Result<PortReply, PortError>;
}

impl PortIntent {
    /// Convert to a router intent; unknown categories or tasks are schema errors.
    pub fn to_intent(&self) -> Result<Intent, PortError> {
        let bad = |what: &str| PortError::PortSchemaError(what.to_string());
        Ok(match self.category.as_str() {
            "LoadChart" => Intent::LoadChart {
                name: self.chart.clone().ok_or_else(|| bad("LoadChart without chart"))?,
            },
            "Overview" => Intent::Overview,
            "ImageAnalysis" => Intent::ImageAnalysis,
            "Operations" => Intent::Operations {
                operation: self.operation.ok_or_else(|| bad("Operations without operation"))?,
            },
            "DataExplore" => {
                let task = match &self.task {
                    Some(t) => Some(Task::parse(t).ok_or_else(|| bad(&format!("unknown task {t:?}")))?),
                    None => None,
                };
                Intent::DataExplore {
                    task,
                    clarify: task.is_none(),
                }
            }
            other => return Err(bad(&format!("unknown category {other:?}"))),
        })
    }
}

/// A port that replays canned replies; for tests and offline demos.
#[derive(Debug, Clone)]
pub struct ScriptedPort {
    pub reply: Result<PortReply, PortError>,
}

impl ModelPort for ScriptedPort {
    fn ask(&self, _request: &PortRequest) -> Result<PortReply, PortError> {
        self.reply.clone()
    }
}

#[cfg(feature = "http-port")]
pub use http::HttpModelPort;

#[cfg(feature = "http-port")]
mod http {
    use std::time::Duration;

    use super::*;

    /// JSON over HTTP POST to a configured endpoint.
    #[derive(Debug, Clone)]
    pub struct HttpModelPort {
        pub url: String,
        agent: ureq::Agent,
    }

    impl HttpModelPort {
        pub fn new(url: impl Into<String>, timeout_ms: u64) -> Self {
            let config = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_millis(timeout_ms)))
                .http_status_as_error(true)
                .build();
            Self {
                url: url.into(),
                agent: config.into(),
            }
        }

        /// Port for `FEELGRID_MODEL_URL`, if set and non-empty.
        pub fn from_env() -> Option<Self> {
            std::env::var(MODEL_URL_ENV)
                .ok()
                .filter(|u| !u.trim().is_empty())
                .map(|u| Self::new(u, DEFAULT_TIMEOUT_MS))
        }
    }

    impl ModelPort for HttpModelPort {
        fn ask(&self, request: &PortRequest) -> Result<PortReply, PortError> {
            let mut resp = self.agent.post(&self.url).send_json(request).map_err(map_err)?;
            resp.body_mut().read_json::<PortReply>().map_err(map_err)
        }
    }

    fn map_err(e: ureq::Error) -> PortError {
        match e {
            ureq::Error::Timeout(_) => PortError::PortTimeout,
            ureq::Error::Json(e) => PortError::PortSchemaError(e.to_string()),
            other => PortError::Transport(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_schema_is_lenient_on_missing_fields() {
        let r: PortReply = serde_json::from_str(r#"{"answer": "hi"}"#).unwrap();
        assert_eq!(r.answer.as_deref(), Some("hi"));
        assert!(r.cited_values.is_empty());
    }

    #[test]
    fn intents_convert() {
        let i = PortIntent {
            category: "DataExplore".into(),
            task: Some("max".into()),
            ..Default::default()
        };
        assert_eq!(
            i.to_intent().unwrap(),
            Intent::DataExplore {
                task: Some(Task::Max),
                clarify: false
            }
        );
        let bad = PortIntent {
            category: "Dance".into(),
            ..Default::default()
        };
        assert!(matches!(bad.to_intent(), Err(PortError::PortSchemaError(_))));
    }
}
