//! Parser for the supported subset of the Vega-Lite JSON grammar.
//!
//! Supported: marks `line`, `bar`, `point`; channels `x`, `y` and one series
//! channel (`series`, or `color` read as a series); transforms `aggregate`,
//! `calculate`, `filter` and the `jitter` extension; inline `data.values` or a
//! `data.url`. The `resolutions` extension declares semantic-zoom layers.
//! Anything outside the subset is an error.

use serde_json::{json, Map, Value as Json};

use super::table::DataRef;
use super::value::{FieldType, TimeUnit, TimeValue, Value};
use crate::transform::{AggregateOp, TransformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Line,
    Bar,
    Point,
}

impl Mark {
    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Line => "line",
            Mark::Bar => "bar",
            Mark::Point => "point",
        }
    }

    pub fn noun(self) -> &'static str {
        match self {
            Mark::Line => "line chart",
            Mark::Bar => "bar chart",
            Mark::Point => "scatterplot",
        }
    }
}

/// Explicit scale domain on a channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleDomain {
    Range { min: Value, max: Value },
    Categories(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub field: String,
    pub ty: FieldType,
    pub scale: Option<ScaleDomain>,
    pub title: Option<String>,
    /// Measurement unit ("%", "USD", ...). Read from `unit`, or from a
    /// parenthesised suffix of the title such as "Interest rate (%)".
    pub unit: Option<String>,
    /// Fixed decimal places from a d3-style `format` such as ".2f".
    pub decimals: Option<usize>,
}

impl FieldDef {
    /// Human name of the measured quantity.
    pub fn noun(&self) -> String {
        match &self.title {
            Some(t) => {
                let base = match t.rfind('(') {
                    Some(i) if t.trim_end().ends_with(')') => t[..i].trim(),
                    _ => t.trim(),
                };
                base.to_lowercase()
            }
            None => self.field.replace('_', " "),
        }
    }
}

/// Semantic-zoom resolutions declared on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionSpec {
    pub units: Vec<TimeUnit>,
    pub op: AggregateOp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub name: String,
    pub title: Option<String>,
    pub mark: Mark,
    pub x: FieldDef,
    pub y: FieldDef,
    pub series: Option<FieldDef>,
    pub transforms: Vec<TransformSpec>,
    pub data: DataRef,
    pub layers: Option<ResolutionSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unsupported mark {0:?} (supported: line, bar, point)")]
    UnsupportedMark(String),
    #[error("unsupported encoding channel {0:?} (supported: x, y, series)")]
    UnsupportedChannel(String),
    #[error("missing {0}")]
    MissingField(String),
    #[error("invalid {channel} field definition: {reason}")]
    InvalidField { channel: String, reason: String },
    #[error("{channel} references column {field:?}, which is absent from the data")]
    SchemaMismatch { channel: String, field: String },
    #[error("transform {index}: {reason}")]
    InvalidTransform { index: usize, reason: String },
    #[error("invalid data: {0}")]
    InvalidData(String),
}

const KNOWN_KEYS: &[&str] = &[
    "$schema",
    "name",
    "title",
    "description",
    "mark",
    "encoding",
    "data",
    "transform",
    "resolutions",
];

/// Parse spec bytes. Unknown top-level keys are ignored; see
/// [`parse_spec_with_warnings`] to collect them.
pub fn parse_spec(bytes: &[u8]) -> Result<ChartSpec, ParseError> {
    parse_spec_with_warnings(bytes).map(|(s, _)| s)
}

/// Parse spec bytes and report ignored keys.
pub fn parse_spec_with_warnings(bytes: &[u8]) -> Result<(ChartSpec, Vec<String>), ParseError> {
    let root: Json = serde_json::from_slice(bytes).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| ParseError::Syntax("top level must be an object".into()))?;
    let mut warnings = Vec::new();
    for key in obj.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            warnings.push(format!("ignored unknown top-level key {key:?}"));
        }
    }

    let mark = parse_mark(obj.get("mark").ok_or_else(|| ParseError::MissingField("mark".into()))?)?;
    let title = match obj.get("title") {
        None | Some(Json::Null) => None,
        Some(Json::String(s)) => Some(s.clone()),
        Some(Json::Object(o)) => o.get("text").and_then(Json::as_str).map(str::to_string),
        Some(_) => return Err(ParseError::Syntax("title must be a string".into())),
    };
    let name = obj
        .get("name")
        .and_then(Json::as_str)
        .map(str::to_string)
        .or_else(|| title.clone())
        .unwrap_or_else(|| "chart".into());

    let encoding = obj
        .get("encoding")
        .and_then(Json::as_object)
        .ok_or_else(|| ParseError::MissingField("encoding".into()))?;
    let mut x = None;
    let mut y = None;
    let mut series: Option<FieldDef> = None;
    for (channel, def) in encoding {
        match channel.as_str() {
            "x" => x = Some(parse_field_def("x", def, &mut warnings)?),
            "y" => y = Some(parse_field_def("y", def, &mut warnings)?),
            "series" | "color" => {
                if series.is_some() {
                    return Err(ParseError::InvalidField {
                        channel: channel.clone(),
                        reason: "at most one series channel".into(),
                    });
                }
                let f = parse_field_def(channel, def, &mut warnings)?;
                if !matches!(f.ty, FieldType::Nominal | FieldType::Ordinal) {
                    return Err(ParseError::InvalidField {
                        channel: channel.clone(),
                        reason: "series field must be nominal or ordinal".into(),
                    });
                }
                series = Some(f);
            }
            other => return Err(ParseError::UnsupportedChannel(other.to_string())),
        }
    }
    let x = x.ok_or_else(|| ParseError::MissingField("encoding.x".into()))?;
    let y = y.ok_or_else(|| ParseError::MissingField("encoding.y".into()))?;

    let data = parse_data(obj.get("data").ok_or_else(|| ParseError::MissingField("data".into()))?)?;

    let transforms = match obj.get("transform") {
        None => Vec::new(),
        Some(Json::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(index, t)| {
                TransformSpec::from_json(t).map_err(|reason| ParseError::InvalidTransform { index, reason })
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(ParseError::Syntax("transform must be an array".into())),
    };

    let layers = match obj.get("resolutions") {
        None => None,
        Some(r) => Some(parse_resolutions(r, &x)?),
    };

    let spec = ChartSpec {
        name,
        title,
        mark,
        x,
        y,
        series,
        transforms,
        data,
        layers,
    };
    if let Some(fields) = spec.data.inline_fields() {
        check_schema(&spec, fields)?;
    }
    Ok((spec, warnings))
}

/// Check that transforms and encodings only reference columns that exist.
pub(crate) fn check_schema(spec: &ChartSpec, mut fields: Vec<String>) -> Result<(), ParseError> {
    for (index, t) in spec.transforms.iter().enumerate() {
        fields = t
            .output_fields(&fields)
            .map_err(|missing| ParseError::InvalidTransform {
                index,
                reason: format!("references absent column {missing:?}"),
            })?;
    }
    let channels = [
        ("x", Some(&spec.x)),
        ("y", Some(&spec.y)),
        ("series", spec.series.as_ref()),
    ];
    for (channel, def) in channels {
        if let Some(def) = def {
            if !fields.contains(&def.field) {
                return Err(ParseError::SchemaMismatch {
                    channel: channel.into(),
                    field: def.field.clone(),
                });
            }
        }
    }
    Ok(())
}

fn parse_mark(v: &Json) -> Result<Mark, ParseError> {
    let name = match v {
        Json::String(s) => s.as_str(),
        Json::Object(o) => o
            .get("type")
            .and_then(Json::as_str)
            .ok_or_else(|| ParseError::MissingField("mark.type".into()))?,
        _ => return Err(ParseError::Syntax("mark must be a string or object".into())),
    };
    match name {
        "line" => Ok(Mark::Line),
        "bar" => Ok(Mark::Bar),
        "point" => Ok(Mark::Point),
        other => Err(ParseError::UnsupportedMark(other.to_string())),
    }
}

fn parse_field_def(channel: &str, v: &Json, warnings: &mut Vec<String>) -> Result<FieldDef, ParseError> {
    let invalid = |reason: String| ParseError::InvalidField {
        channel: channel.to_string(),
        reason,
    };
    let obj = v.as_object().ok_or_else(|| invalid("must be an object".into()))?;
    let field = obj
        .get("field")
        .and_then(Json::as_str)
        .ok_or_else(|| ParseError::MissingField(format!("encoding.{channel}.field")))?
        .to_string();
    let ty_name = obj
        .get("type")
        .and_then(Json::as_str)
        .ok_or_else(|| ParseError::MissingField(format!("encoding.{channel}.type")))?;
    let ty = FieldType::parse(ty_name).ok_or_else(|| invalid(format!("unknown type {ty_name:?}")))?;
    for key in obj.keys() {
        if !["field", "type", "scale", "title", "unit", "format", "axis"].contains(&key.as_str()) {
            warnings.push(format!("ignored key {key:?} on channel {channel}"));
        }
    }
    let title = obj
        .get("title")
        .or_else(|| obj.get("axis").and_then(|a| a.get("title")))
        .and_then(Json::as_str)
        .map(str::to_string);
    let unit = obj.get("unit").and_then(Json::as_str).map(str::to_string).or_else(|| {
        let t = title.as_deref()?.trim_end();
        let open = t.rfind('(')?;
        t.ends_with(')').then(|| t[open + 1..t.len() - 1].trim().to_string())
    });
    let format = obj
        .get("format")
        .or_else(|| obj.get("axis").and_then(|a| a.get("format")))
        .and_then(Json::as_str);
    let decimals = match format {
        None => None,
        Some(f) => Some(parse_format(f).ok_or_else(|| invalid(format!("unsupported format {f:?}")))?),
    };
    let scale = match obj.get("scale").and_then(|s| s.get("domain")) {
        None => None,
        Some(domain) => Some(parse_domain(ty, domain).map_err(invalid)?),
    };
    Ok(FieldDef {
        field,
        ty,
        scale,
        title,
        unit,
        decimals,
    })
}

/// ".2f" → 2, ".0f" → 0.
fn parse_format(f: &str) -> Option<usize> {
    f.strip_prefix('.')?.strip_suffix('f')?.parse().ok()
}

fn parse_domain(ty: FieldType, domain: &Json) -> Result<ScaleDomain, String> {
    let items = domain.as_array().ok_or("scale domain must be an array")?;
    match ty {
        FieldType::Quantitative => {
            let [lo, hi] = items.as_slice() else {
                return Err("quantitative domain needs [min, max]".into());
            };
            let (lo, hi) = (
                lo.as_f64().ok_or("domain min not numeric")?,
                hi.as_f64().ok_or("domain max not numeric")?,
            );
            if !(lo < hi) {
                return Err(format!("domain min {lo} must be below max {hi}"));
            }
            Ok(ScaleDomain::Range {
                min: Value::Number(lo),
                max: Value::Number(hi),
            })
        }
        FieldType::Temporal => {
            let [lo, hi] = items.as_slice() else {
                return Err("temporal domain needs [min, max]".into());
            };
            let parse = |v: &Json| -> Result<TimeValue, String> {
                TimeValue::parse(v.as_str().ok_or("temporal domain bounds must be strings")?).map_err(|e| e.to_string())
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo.day >= hi.day {
                return Err("temporal domain min must precede max".into());
            }
            Ok(ScaleDomain::Range {
                min: Value::Time(lo),
                max: Value::Time(hi),
            })
        }
        FieldType::Ordinal | FieldType::Nominal => Ok(ScaleDomain::Categories(
            items
                .iter()
                .map(|v| match v {
                    Json::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect(),
        )),
    }
}

fn parse_data(v: &Json) -> Result<DataRef, ParseError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ParseError::InvalidData("data must be an object".into()))?;
    if let Some(values) = obj.get("values") {
        let rows = values
            .as_array()
            .ok_or_else(|| ParseError::InvalidData("data.values must be an array".into()))?
            .iter()
            .map(|r| {
                r.as_object()
                    .cloned()
                    .ok_or_else(|| ParseError::InvalidData("each data.values entry must be an object".into()))
            })
            .collect::<Result<_, _>>()?;
        return Ok(DataRef::Values(rows));
    }
    if let Some(url) = obj.get("url").and_then(Json::as_str) {
        return Ok(DataRef::Url(url.to_string()));
    }
    Err(ParseError::MissingField("data.values or data.url".into()))
}

fn parse_resolutions(v: &Json, x: &FieldDef) -> Result<ResolutionSpec, ParseError> {
    let invalid = |reason: &str| ParseError::InvalidField {
        channel: "resolutions".into(),
        reason: reason.into(),
    };
    if x.ty != FieldType::Temporal {
        return Err(invalid("resolution layers need a temporal x channel"));
    }
    let units = v
        .get("units")
        .and_then(Json::as_array)
        .ok_or_else(|| invalid("needs a \"units\" array"))?
        .iter()
        .map(|u| {
            u.as_str()
                .and_then(TimeUnit::parse)
                .ok_or_else(|| invalid("unknown time unit"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if units.is_empty() || units.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("units must be distinct and sorted coarse to fine"));
    }
    let op = match v.get("op") {
        None => AggregateOp::Mean,
        Some(o) => o
            .as_str()
            .and_then(AggregateOp::parse)
            .ok_or_else(|| invalid("unknown aggregate op"))?,
    };
    Ok(ResolutionSpec { units, op })
}

fn field_def_json(def: &FieldDef) -> Json {
    let mut m = Map::new();
    m.insert("field".into(), json!(def.field));
    m.insert("type".into(), json!(def.ty.as_str()));
    if let Some(t) = &def.title {
        m.insert("title".into(), json!(t));
    }
    if let Some(u) = &def.unit {
        m.insert("unit".into(), json!(u));
    }
    if let Some(d) = def.decimals {
        m.insert("format".into(), json!(format!(".{d}f")));
    }
    if let Some(scale) = &def.scale {
        let domain = match scale {
            ScaleDomain::Range { min, max } => {
                let j = |v: &Value| match v {
                    Value::Number(n) => json!(n),
                    Value::Time(t) => json!(t.label),
                    other => json!(other.label(0)),
                };
                json!([j(min), j(max)])
            }
            ScaleDomain::Categories(c) => json!(c),
        };
        m.insert("scale".into(), json!({ "domain": domain }));
    }
    Json::Object(m)
}

impl ChartSpec {
    /// Serialize back to the grammar's JSON surface form.
    pub fn to_json(&self) -> Json {
        let mut encoding = Map::new();
        encoding.insert("x".into(), field_def_json(&self.x));
        encoding.insert("y".into(), field_def_json(&self.y));
        if let Some(s) = &self.series {
            encoding.insert("series".into(), field_def_json(s));
        }
        let mut root = Map::new();
        root.insert("name".into(), json!(self.name));
        if let Some(t) = &self.title {
            root.insert("title".into(), json!(t));
        }
        root.insert("mark".into(), json!(self.mark.as_str()));
        root.insert("encoding".into(), Json::Object(encoding));
        root.insert(
            "data".into(),
            match &self.data {
                DataRef::Values(rows) => json!({ "values": rows }),
                DataRef::Url(u) => json!({ "url": u }),
            },
        );
        if !self.transforms.is_empty() {
            root.insert(
                "transform".into(),
                Json::Array(self.transforms.iter().map(TransformSpec::to_json).collect()),
            );
        }
        if let Some(l) = &self.layers {
            root.insert(
                "resolutions".into(),
                json!({
                    "units": l.units.iter().map(|u| u.as_str()).collect::<Vec<_>>(),
                    "op": l.op.as_str(),
                }),
            );
        }
        Json::Object(root)
    }

    /// Declared channel types, used to type columns at load.
    pub fn type_hints(&self) -> super::table::TypeHints {
        let mut h = super::table::TypeHints::new();
        for def in [Some(&self.x), Some(&self.y), self.series.as_ref()]
            .into_iter()
            .flatten()
        {
            h.insert(def.field.clone(), def.ty);
        }
        h
    }
}
