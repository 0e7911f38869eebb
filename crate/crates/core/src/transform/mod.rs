//! Data transforms applied at chart load, plus the resolution hierarchy used
//! for semantic zoom.

pub mod expr;
mod hierarchy;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::chart::table::{Column, DataTable};
use crate::chart::value::{FieldType, TimeUnit, Value};

pub use expr::{eval_expression, ExprError};
pub use hierarchy::{build_hierarchy, LayerId, ResolutionLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Mean,
    Sum,
    Min,
    Max,
    Count,
}

impl AggregateOp {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean" | "average" => Some(Self::Mean),
            "sum" => Some(Self::Sum),
            "min" => Some(Self::Min),
            "max" => Some(Self::Max),
            "count" => Some(Self::Count),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Sum => "sum",
            Self::Min => "min",
            Self::Max => "max",
            Self::Count => "count",
        }
    }
}

/// One declared transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformSpec {
    Aggregate {
        op: AggregateOp,
        /// `None` only for `count`, which then counts rows.
        field: Option<String>,
        groupby: Vec<String>,
        time_unit: Option<TimeUnit>,
        output: String,
    },
    Calculate {
        expression: String,
        output: String,
    },
    Filter {
        predicate: String,
    },
    Jitter {
        field: String,
        amplitude: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("transform {index}: {source}")]
    Expression {
        index: usize,
        #[source]
        source: ExprError,
    },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {0:?} is not numeric")]
    NonNumeric(String),
    #[error("group-by column {0:?} is not temporal")]
    NonTemporalGroupBy(String),
    #[error("time units must be sorted coarse to fine: {0:?}")]
    UnsortedUnits(Vec<TimeUnit>),
    #[error("invalid transform: {0}")]
    Invalid(String),
}

impl TransformSpec {
    /// Read one entry of the grammar's `transform` array.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        let obj = v.as_object().ok_or("transform must be an object")?;
        let str_field = |k: &str| -> Result<String, String> {
            obj.get(k)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| format!("transform needs string {k:?}"))
        };
        if let Some(expression) = obj.get("calculate") {
            let expression = expression.as_str().ok_or("calculate must be a string")?.to_string();
            expr::parse(&expression).map_err(|e| format!("calculate: {e}"))?;
            return Ok(Self::Calculate {
                expression,
                output: str_field("as")?,
            });
        }
        if let Some(pred) = obj.get("filter") {
            let predicate = pred.as_str().ok_or("filter must be an expression string")?.to_string();
            expr::parse(&predicate).map_err(|e| format!("filter: {e}"))?;
            return Ok(Self::Filter { predicate });
        }
        if let Some(field) = obj.get("jitter") {
            let field = field.as_str().ok_or("jitter must name a field")?.to_string();
            let amplitude = obj
                .get("amplitude")
                .and_then(|v| v.as_f64())
                .ok_or("jitter needs numeric \"amplitude\"")?;
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(format!("jitter amplitude must be >= 0, got {amplitude}"));
            }
            let seed = obj
                .get("seed")
                .and_then(|v| v.as_u64())
                .ok_or("jitter requires an explicit integer \"seed\"")?;
            return Ok(Self::Jitter { field, amplitude, seed });
        }
        if let Some(aggs) = obj.get("aggregate") {
            let aggs = aggs.as_array().ok_or("aggregate must be an array")?;
            let [agg] = aggs.as_slice() else {
                return Err("aggregate supports exactly one operation per transform".into());
            };
            let op_name = agg.get("op").and_then(|v| v.as_str()).ok_or("aggregate needs \"op\"")?;
            let op = AggregateOp::parse(op_name).ok_or_else(|| format!("unsupported aggregate op {op_name:?}"))?;
            let field = agg.get("field").and_then(|v| v.as_str()).map(str::to_string);
            if field.is_none() && op != AggregateOp::Count {
                return Err(format!("aggregate {op_name} needs a \"field\""));
            }
            let output = agg
                .get("as")
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| match &field {
                    Some(f) => format!("{}_{}", op.as_str(), f),
                    None => op.as_str().to_string(),
                });
            let groupby = match obj.get("groupby") {
                None => Vec::new(),
                Some(g) => g
                    .as_array()
                    .ok_or("groupby must be an array")?
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or("groupby entries must be strings"))
                    .collect::<Result<_, _>>()?,
            };
            let time_unit = match obj.get("timeUnit") {
                None => None,
                Some(u) => {
                    let u = u.as_str().ok_or("timeUnit must be a string")?;
                    Some(TimeUnit::parse(u).ok_or_else(|| format!("unsupported timeUnit {u:?}"))?)
                }
            };
            return Ok(Self::Aggregate {
                op,
                field,
                groupby,
                time_unit,
                output,
            });
        }
        Err(format!(
            "unsupported transform (expected aggregate, calculate, filter or jitter): {}",
            serde_json::Value::Object(obj.clone())
        ))
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Calculate { expression, output } => json!({"calculate": expression, "as": output}),
            Self::Filter { predicate } => json!({"filter": predicate}),
            Self::Jitter { field, amplitude, seed } => json!({"jitter": field, "amplitude": amplitude, "seed": seed}),
            Self::Aggregate {
                op,
                field,
                groupby,
                time_unit,
                output,
            } => {
                let mut agg = serde_json::Map::new();
                agg.insert("op".into(), json!(op.as_str()));
                if let Some(f) = field {
                    agg.insert("field".into(), json!(f));
                }
                agg.insert("as".into(), json!(output));
                let mut v = json!({"aggregate": [agg], "groupby": groupby});
                if let Some(u) = time_unit {
                    v["timeUnit"] = json!(u.as_str());
                }
                v
            }
        }
    }

    /// Column names after this transform, given the names before it.
    pub fn output_fields(&self, input: &[String]) -> Result<Vec<String>, String> {
        let need = |c: &str| {
            if input.iter().any(|n| n == c) {
                Ok(())
            } else {
                Err(c.to_string())
            }
        };
        match self {
            Self::Filter { .. } => Ok(input.to_vec()),
            Self::Jitter { field, .. } => {
                need(field)?;
                Ok(input.to_vec())
            }
            Self::Calculate { output, .. } => {
                let mut out = input.to_vec();
                if !out.contains(output) {
                    out.push(output.clone());
                }
                Ok(out)
            }
            Self::Aggregate {
                field, groupby, output, ..
            } => {
                if let Some(f) = field {
                    need(f)?;
                }
                for g in groupby {
                    need(g)?;
                }
                let mut out = groupby.clone();
                out.push(output.clone());
                Ok(out)
            }
        }
    }
}

/// Apply transforms in declaration order. The input is never modified.
pub fn apply_transforms(table: &DataTable, transforms: &[TransformSpec]) -> Result<DataTable, TransformError> {
    let mut current = table.clone();
    for (index, t) in transforms.iter().enumerate() {
        current = apply_one(&current, t, index)?;
    }
    Ok(current)
}

fn apply_one(table: &DataTable, t: &TransformSpec, index: usize) -> Result<DataTable, TransformError> {
    match t {
        TransformSpec::Filter { predicate } => filter(table, predicate, index),
        TransformSpec::Calculate { expression, output } => calculate(table, expression, output, index),
        TransformSpec::Jitter { field, amplitude, seed } => jitter(table, field, *amplitude, *seed),
        TransformSpec::Aggregate {
            op,
            field,
            groupby,
            time_unit,
            output,
        } => aggregate(table, *op, field.as_deref(), groupby, *time_unit, output),
    }
}

fn expr_error(index: usize, e: ExprError, table: &DataTable, parsed: Option<&expr::Expr>) -> TransformError {
    if let Some(p) = parsed {
        if let Some(missing) = p.columns().into_iter().find(|c| table.column_index(c).is_none()) {
            return TransformError::UnknownColumn(missing.to_string());
        }
    }
    TransformError::Expression { index, source: e }
}

fn filter(table: &DataTable, predicate: &str, index: usize) -> Result<DataTable, TransformError> {
    let parsed = expr::parse(predicate).map_err(|e| expr_error(index, e, table, None))?;
    let mut rows = Vec::new();
    for row in table.rows() {
        let binding = expr::SchemaRow {
            columns: table.columns(),
            values: row,
        };
        match expr::eval(&parsed, &binding).map_err(|e| expr_error(index, e, table, Some(&parsed)))? {
            Value::Bool(true) => rows.push(row.clone()),
            Value::Bool(false) | Value::Null => {}
            other => {
                return Err(TransformError::Expression {
                    index,
                    source: ExprError {
                        message: format!("filter predicate produced {other:?}, expected boolean"),
                        span: parsed.span.clone(),
                    },
                })
            }
        }
    }
    Ok(DataTable::new(table.columns().to_vec(), rows).expect("filter preserves schema"))
}

fn calculate(table: &DataTable, expression: &str, output: &str, index: usize) -> Result<DataTable, TransformError> {
    let parsed = expr::parse(expression).map_err(|e| expr_error(index, e, table, None))?;
    let mut values = Vec::with_capacity(table.row_count());
    for row in table.rows() {
        let binding = expr::SchemaRow {
            columns: table.columns(),
            values: row,
        };
        values.push(expr::eval(&parsed, &binding).map_err(|e| expr_error(index, e, table, Some(&parsed)))?);
    }
    let first = values.iter().find(|v| !v.is_null());
    let ty = match first {
        None | Some(Value::Number(_)) => FieldType::Quantitative,
        Some(Value::Time(_)) => FieldType::Temporal,
        Some(_) => FieldType::Nominal,
    };
    let uniform = values.iter().all(|v| {
        v.is_null()
            || matches!(
                (ty, v),
                (FieldType::Quantitative, Value::Number(_))
                    | (FieldType::Temporal, Value::Time(_))
                    | (FieldType::Nominal, Value::Text(_) | Value::Bool(_))
            )
    });
    if !uniform {
        return Err(TransformError::Expression {
            index,
            source: ExprError {
                message: "calculate produced values of mixed types".into(),
                span: parsed.span.clone(),
            },
        });
    }
    let decimals = parsed
        .columns()
        .iter()
        .filter_map(|c| table.column(c))
        .map(|c| c.decimals)
        .max()
        .unwrap_or(0);
    let (mut columns, mut rows) = table.clone().into_parts();
    let col = Column::new(output, ty).with_decimals(decimals);
    match columns.iter().position(|c| c.name == output) {
        Some(i) => {
            columns[i] = col;
            for (row, v) in rows.iter_mut().zip(values) {
                row[i] = v;
            }
        }
        None => {
            columns.push(col);
            for (row, v) in rows.iter_mut().zip(values) {
                row.push(v);
            }
        }
    }
    Ok(DataTable::new(columns, rows).expect("calculate output conforms"))
}

/// Add seeded uniform noise in `[-amplitude, amplitude]` to a numeric column.
pub fn jitter(table: &DataTable, field: &str, amplitude: f64, seed: u64) -> Result<DataTable, TransformError> {
    let idx = table
        .column_index(field)
        .ok_or_else(|| TransformError::UnknownColumn(field.to_string()))?;
    if table.columns()[idx].ty != FieldType::Quantitative {
        return Err(TransformError::NonNumeric(field.to_string()));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(TransformError::Invalid(format!("jitter amplitude {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(table.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (columns, mut rows) = table.clone().into_parts();
    for row in &mut rows {
        if let Value::Number(n) = row[idx] {
            row[idx] = Value::Number(n + rng.gen_range(-amplitude..=amplitude));
        }
    }
    Ok(DataTable::new(columns, rows).expect("jitter preserves schema"))
}

/// Group key with a total order over values.
#[derive(Debug, Clone, PartialEq)]
struct GroupKey(Vec<Value>);

impl Eq for GroupKey {}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }
}

/// Group rows and reduce one field. Nulls are excluded from every op; `count`
/// counts non-null values (or rows when no field is given). Groups come out
/// sorted by key. A time unit buckets the first temporal group-by column.
pub fn aggregate(
    table: &DataTable,
    op: AggregateOp,
    field: Option<&str>,
    groupby: &[String],
    time_unit: Option<TimeUnit>,
    output: &str,
) -> Result<DataTable, TransformError> {
    let field_idx = match field {
        Some(f) => {
            let i = table
                .column_index(f)
                .ok_or_else(|| TransformError::UnknownColumn(f.to_string()))?;
            if op != AggregateOp::Count && table.columns()[i].ty != FieldType::Quantitative {
                return Err(TransformError::NonNumeric(f.to_string()));
            }
            Some(i)
        }
        None if op == AggregateOp::Count => None,
        None => return Err(TransformError::Invalid(format!("{} needs a field", op.as_str()))),
    };
    let group_idx: Vec<usize> = groupby
        .iter()
        .map(|g| {
            table
                .column_index(g)
                .ok_or_else(|| TransformError::UnknownColumn(g.clone()))
        })
        .collect::<Result<_, _>>()?;
    let bucketed = match time_unit {
        None => None,
        Some(unit) => {
            let pos = group_idx
                .iter()
                .position(|&i| table.columns()[i].ty == FieldType::Temporal)
                .ok_or_else(|| TransformError::NonTemporalGroupBy(groupby.join(",")))?;
            Some((pos, unit))
        }
    };

    let mut groups: BTreeMap<GroupKey, Vec<Option<f64>>> = BTreeMap::new();
    for row in table.rows() {
        let key: Vec<Value> = group_idx
            .iter()
            .enumerate()
            .map(|(k, &i)| match (&row[i], bucketed) {
                (Value::Time(t), Some((pos, unit))) if pos == k => Value::Time(t.truncate(unit)),
                (v, _) => v.clone(),
            })
            .collect();
        let v = match field_idx {
            Some(i) => match &row[i] {
                Value::Null => None,
                Value::Number(n) => Some(*n),
                _ => Some(0.0),
            },
            None => Some(0.0),
        };
        groups.entry(GroupKey(key)).or_default().push(v);
    }

    let mut columns: Vec<Column> = group_idx.iter().map(|&i| table.columns()[i].clone()).collect();
    let decimals = match (op, field_idx) {
        (AggregateOp::Count, _) | (_, None) => 0,
        (_, Some(i)) => table.columns()[i].decimals,
    };
    columns.push(Column::new(output, FieldType::Quantitative).with_decimals(decimals));

    let rows = groups
        .into_iter()
        .map(|(GroupKey(mut key), vals)| {
            let present: Vec<f64> = vals.into_iter().flatten().collect();
            let reduced = reduce(op, &present);
            key.push(reduced);
            key
        })
        .collect();
    DataTable::new(columns, rows).map_err(|e| TransformError::Invalid(e.to_string()))
}

fn reduce(op: AggregateOp, xs: &[f64]) -> Value {
    match op {
        AggregateOp::Count => Value::Number(xs.len() as f64),
        AggregateOp::Sum => Value::Number(xs.iter().sum()),
        _ if xs.is_empty() => Value::Null,
        AggregateOp::Mean => Value::Number(xs.iter().sum::<f64>() / xs.len() as f64),
        AggregateOp::Min => Value::Number(xs.iter().copied().fold(f64::INFINITY, f64::min)),
        AggregateOp::Max => Value::Number(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::table::{parse_csv, TypeHints};

    fn fixture() -> DataTable {
        let hints: TypeHints = [("quarter".to_string(), FieldType::Temporal)].into();
        parse_csv(include_str!("../../../../data/catalogue/interest_rates.csv"), &hints).unwrap()
    }

    fn column(t: &DataTable, name: &str) -> Vec<Value> {
        t.values(name).unwrap().cloned().collect()
    }

    #[test]
    fn filter_keeps_rows_above_threshold() {
        let t = fixture();
        let out = apply_transforms(
            &t,
            &[TransformSpec::Filter {
                predicate: "interest > 1.0".into(),
            }],
        )
        .unwrap();
        // Hand filter of the 13-quarter fixture: 1.20, 2.40, 3.10, 3.55, 3.85.
        let kept: Vec<f64> = column(&out, "interest").iter().filter_map(Value::as_f64).collect();
        assert_eq!(kept, [1.20, 2.40, 3.10, 3.55, 3.85]);
    }

    #[test]
    fn empty_transform_list_is_identity() {
        let t = fixture();
        assert_eq!(apply_transforms(&t, &[]).unwrap(), t);
    }

    #[test]
    fn calculate_adds_column_with_same_row_count() {
        let t = fixture();
        let out = apply_transforms(
            &t,
            &[TransformSpec::Calculate {
                expression: "interest * 100".into(),
                output: "bps".into(),
            }],
        )
        .unwrap();
        assert_eq!(out.row_count(), 13);
        let bps = column(&out, "bps");
        // Spot checks: rows 0, 1, 12 → 25, 10, 385 basis points.
        for (i, want) in [(0, 25.0), (1, 10.0), (12, 385.0)] {
            approx::assert_abs_diff_eq!(bps[i].as_f64().unwrap(), want, epsilon = 1e-9);
        }
        assert_eq!(t.columns().len(), 2, "input untouched");
    }

    #[test]
    fn unknown_column_in_expression() {
        let err = apply_transforms(
            &fixture(),
            &[TransformSpec::Filter {
                predicate: "rate > 1".into(),
            }],
        )
        .unwrap_err();
        assert_eq!(err, TransformError::UnknownColumn("rate".into()));
    }

    #[test]
    fn filter_division_by_zero_is_expression_error() {
        let err = apply_transforms(
            &fixture(),
            &[TransformSpec::Filter {
                predicate: "interest / 0 > 1".into(),
            }],
        )
        .unwrap_err();
        assert!(matches!(err, TransformError::Expression { index: 0, .. }));
    }

    #[test]
    fn aggregate_by_year_counts_non_null() {
        let t = fixture();
        let out = aggregate(
            &t,
            AggregateOp::Count,
            Some("interest"),
            &["quarter".into()],
            Some(TimeUnit::Year),
            "n",
        )
        .unwrap();
        let counts: Vec<f64> = column(&out, "n").iter().filter_map(Value::as_f64).collect();
        assert_eq!(counts, [3.0, 4.0, 4.0, 2.0]);
        let years: Vec<String> = column(&out, "quarter").iter().map(|v| v.label(0)).collect();
        assert_eq!(years, ["2020", "2021", "2022", "2023"]);
    }

    #[test]
    fn aggregate_excludes_nulls() {
        let t = parse_csv("g,v\na,1\na,\na,3\nb,\n", &TypeHints::new()).unwrap();
        let mean = aggregate(&t, AggregateOp::Mean, Some("v"), &["g".into()], None, "m").unwrap();
        assert_eq!(column(&mean, "m"), [Value::Number(2.0), Value::Null]);
        let count = aggregate(&t, AggregateOp::Count, Some("v"), &["g".into()], None, "c").unwrap();
        assert_eq!(column(&count, "c"), [Value::Number(2.0), Value::Number(0.0)]);
        let rows = aggregate(&t, AggregateOp::Count, None, &["g".into()], None, "c").unwrap();
        assert_eq!(column(&rows, "c"), [Value::Number(3.0), Value::Number(1.0)]);
    }

    #[test]
    fn time_unit_needs_temporal_groupby() {
        let t = parse_csv("g,v\na,1\n", &TypeHints::new()).unwrap();
        let err = aggregate(
            &t,
            AggregateOp::Sum,
            Some("v"),
            &["g".into()],
            Some(TimeUnit::Month),
            "s",
        )
        .unwrap_err();
        assert!(matches!(err, TransformError::NonTemporalGroupBy(_)));
    }

    #[test]
    fn jitter_zero_amplitude_is_identity_and_seeded_is_reproducible() {
        let t = fixture();
        assert_eq!(jitter(&t, "interest", 0.0, 1).unwrap(), t);
        let a = jitter(&t, "interest", 0.05, 42).unwrap();
        let b = jitter(&t, "interest", 0.05, 42).unwrap();
        let c = jitter(&t, "interest", 0.05, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (orig, j) in column(&t, "interest").iter().zip(column(&a, "interest")) {
            assert!((orig.as_f64().unwrap() - j.as_f64().unwrap()).abs() <= 0.05);
        }
    }

    #[test]
    fn transform_json_round_trip() {
        let src = serde_json::json!([
            {"filter": "datum.interest > 1.0"},
            {"calculate": "interest * 100", "as": "bps"},
            {"jitter": "bps", "amplitude": 0.5, "seed": 9},
            {"aggregate": [{"op": "mean", "field": "bps", "as": "avg"}], "groupby": ["quarter"], "timeUnit": "year"}
        ]);
        for item in src.as_array().unwrap() {
            let t = TransformSpec::from_json(item).unwrap();
            assert_eq!(TransformSpec::from_json(&t.to_json()).unwrap(), t);
        }
        assert!(TransformSpec::from_json(&serde_json::json!({"jitter": "x", "amplitude": 1.0})).is_err());
        assert!(TransformSpec::from_json(&serde_json::json!({"window": []})).is_err());
        assert!(TransformSpec::from_json(&serde_json::json!({"filter": "a >"})).is_err());
    }
}
