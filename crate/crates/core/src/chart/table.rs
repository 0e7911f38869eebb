//! Immutable columnar-schema tables and their loaders.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::value::{literal_decimals, FieldType, TimeValue, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: FieldType,
    /// Display precision observed in the source literals.
    #[serde(default)]
    pub decimals: usize,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: FieldType) -> Self {
        Self {
            name: name.into(),
            ty,
            decimals: 0,
        }
    }

    pub fn with_decimals(mut self, decimals: usize) -> Self {
        self.decimals = decimals;
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("row {row}, column {column:?}: cannot read {raw:?} as {expected}")]
    TypeCoercion {
        row: usize,
        column: String,
        raw: String,
        expected: &'static str,
    },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("row {row} has {got} values, expected {expected}")]
    RowArity { row: usize, got: usize, expected: usize },
    #[error("row {row}, column {column:?}: value does not conform to {expected}")]
    Nonconforming {
        row: usize,
        column: String,
        expected: &'static str,
    },
}

/// Tabular data with a fixed schema. Every row has one value per column and
/// every value either conforms to its column type or is `Null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

fn conforms(ty: FieldType, v: &Value) -> bool {
    match (ty, v) {
        (_, Value::Null) => true,
        (FieldType::Quantitative, Value::Number(n)) => n.is_finite(),
        (FieldType::Temporal, Value::Time(_)) => true,
        (FieldType::Ordinal | FieldType::Nominal, Value::Text(_) | Value::Number(_) | Value::Bool(_)) => true,
        _ => false,
    }
}

impl DataTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Value>>) -> Result<Self, TableError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(TableError::RowArity {
                    row: r,
                    got: row.len(),
                    expected: columns.len(),
                });
            }
            for (c, v) in columns.iter().zip(row) {
                if !conforms(c.ty, v) {
                    return Err(TableError::Nonconforming {
                        row: r,
                        column: c.name.clone(),
                        expected: c.ty.as_str(),
                    });
                }
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn empty(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Iterate one column's values.
    pub fn values<'a>(&'a self, name: &str) -> Option<impl Iterator<Item = &'a Value> + 'a> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(move |r| &r[idx]))
    }

    /// Content digest (schema + values), used to check purity of transforms.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("table serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub(crate) fn into_parts(self) -> (Vec<Column>, Vec<Vec<Value>>) {
        (self.columns, self.rows)
    }
}

/// Where a chart's rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataRef {
    /// Inline row objects, as in the grammar's `data.values`.
    Values(Vec<serde_json::Map<String, serde_json::Value>>),
    /// A CSV (or JSON row array) file, relative to the spec's directory.
    Url(String),
}

impl DataRef {
    /// Column names and observed order for inline rows, without typing.
    pub fn inline_fields(&self) -> Option<Vec<String>> {
        match self {
            DataRef::Values(rows) => {
                let mut names: Vec<String> = Vec::new();
                for row in rows {
                    for k in row.keys() {
                        if !names.contains(k) {
                            names.push(k.clone());
                        }
                    }
                }
                Some(names)
            }
            DataRef::Url(_) => None,
        }
    }
}

/// Declared types for fields that appear in encodings; other columns are inferred.
pub type TypeHints = HashMap<String, FieldType>;

/// Load and type a table. Relative URLs resolve against `base_dir`.
pub fn load_table(data: &DataRef, base_dir: &Path, hints: &TypeHints) -> Result<DataTable, TableError> {
    match data {
        DataRef::Values(rows) => {
            let names = data.inline_fields().unwrap_or_default();
            let raw: Vec<Vec<RawCell>> = rows
                .iter()
                .map(|row| names.iter().map(|n| RawCell::from_json(row.get(n))).collect())
                .collect();
            type_columns(names, raw, hints)
        }
        DataRef::Url(url) => {
            let path = base_dir.join(url);
            let text = std::fs::read_to_string(&path).map_err(|source| TableError::Io {
                path: path.clone(),
                source,
            })?;
            if path.extension().is_some_and(|e| e == "json") {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> =
                    serde_json::from_str(&text).map_err(|e| TableError::Csv {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                return load_table(&DataRef::Values(rows), base_dir, hints);
            }
            parse_csv(&text, hints).map_err(|e| match e {
                TableError::Csv { message, .. } => TableError::Csv { path, message },
                other => other,
            })
        }
    }
}

/// Parse CSV text with a header row.
pub fn parse_csv(text: &str, hints: &TypeHints) -> Result<DataTable, TableError> {
    let csv_err = |e: csv::Error| TableError::Csv {
        path: PathBuf::new(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        raw.push(
            record
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        RawCell::Null
                    } else {
                        RawCell::Text(s.to_string())
                    }
                })
                .collect(),
        );
    }
    type_columns(names, raw, hints)
}

#[derive(Debug, Clone)]
enum RawCell {
    Null,
    Bool(bool),
    Number(String),
    Text(String),
}

impl RawCell {
    fn from_json(v: Option<&serde_json::Value>) -> Self {
        match v {
            None | Some(serde_json::Value::Null) => RawCell::Null,
            Some(serde_json::Value::Bool(b)) => RawCell::Bool(*b),
            Some(serde_json::Value::Number(n)) => RawCell::Number(n.to_string()),
            Some(serde_json::Value::String(s)) => RawCell::Text(s.clone()),
            Some(other) => RawCell::Text(other.to_string()),
        }
    }

    fn text(&self) -> String {
        match self {
            RawCell::Null => String::new(),
            RawCell::Bool(b) => b.to_string(),
            RawCell::Number(s) | RawCell::Text(s) => s.clone(),
        }
    }

    fn as_number(&self) -> Option<(f64, usize)> {
        match self {
            RawCell::Number(s) | RawCell::Text(s) => {
                let n: f64 = s.parse().ok()?;
                n.is_finite().then(|| (n, literal_decimals(s)))
            }
            _ => None,
        }
    }
}

fn type_columns(names: Vec<String>, raw: Vec<Vec<RawCell>>, hints: &TypeHints) -> Result<DataTable, TableError> {
    let mut columns = Vec::with_capacity(names.len());
    let mut typed: Vec<Vec<Value>> = vec![Vec::with_capacity(names.len()); raw.len()];
    for (ci, name) in names.iter().enumerate() {
        let cells = raw.iter().map(|r| r.get(ci).cloned().unwrap_or(RawCell::Null));
        let ty = match hints.get(name) {
            Some(t) => *t,
            None => {
                let numeric = raw
                    .iter()
                    .filter_map(|r| r.get(ci))
                    .filter(|c| !matches!(c, RawCell::Null))
                    .all(|c| c.as_number().is_some());
                if numeric {
                    FieldType::Quantitative
                } else {
                    FieldType::Nominal
                }
            }
        };
        let mut decimals = 0;
        for (ri, cell) in cells.enumerate() {
            let coerce_err = |expected| TableError::TypeCoercion {
                row: ri,
                column: name.clone(),
                raw: cell.text(),
                expected,
            };
            let v = match (&cell, ty) {
                (RawCell::Null, _) => Value::Null,
                (_, FieldType::Quantitative) => {
                    let (n, d) = cell.as_number().ok_or_else(|| coerce_err("quantitative"))?;
                    decimals = decimals.max(d);
                    Value::Number(n)
                }
                (_, FieldType::Temporal) => {
                    Value::Time(TimeValue::parse(&cell.text()).map_err(|_| coerce_err("temporal"))?)
                }
                (RawCell::Bool(b), _) => Value::Bool(*b),
                (RawCell::Number(s), _) => Value::Text(s.clone()),
                (RawCell::Text(s), _) => Value::Text(s.clone()),
            };
            typed[ri].push(v);
        }
        columns.push(Column::new(name.clone(), ty).with_decimals(decimals));
    }
    DataTable::new(columns, typed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hints(pairs: &[(&str, FieldType)]) -> TypeHints {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn csv_header_only_gives_empty_table() {
        let t = parse_csv("quarter,interest\n", &TypeHints::new()).unwrap();
        assert_eq!(t.row_count(), 0);
        assert_eq!(t.columns().len(), 2);
    }

    #[test]
    fn bad_quarter_reports_location() {
        let h = hints(&[("quarter", FieldType::Temporal)]);
        let err = parse_csv("quarter,interest\n2020-Q4,0.1\n2020-Q5,0.2\n", &h).unwrap_err();
        match err {
            TableError::TypeCoercion { row, column, raw, .. } => {
                assert_eq!((row, column.as_str(), raw.as_str()), (1, "quarter", "2020-Q5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inline_values_keep_first_seen_column_order_and_infer_types() {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> =
            serde_json::from_str(r#"[{"cat":"a","n":1.5},{"n":2,"cat":"b","extra":null}]"#).unwrap();
        let t = load_table(&DataRef::Values(rows), Path::new("."), &TypeHints::new()).unwrap();
        let names: Vec<_> = t.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["cat", "n", "extra"]);
        assert_eq!(t.column("n").unwrap().ty, FieldType::Quantitative);
        assert_eq!(t.column("n").unwrap().decimals, 1);
        assert_eq!(t.column("cat").unwrap().ty, FieldType::Nominal);
        assert_eq!(t.rows()[0][2], Value::Null);
    }

    #[test]
    fn duplicate_columns_rejected() {
        let cols = vec![
            Column::new("a", FieldType::Nominal),
            Column::new("a", FieldType::Nominal),
        ];
        assert!(matches!(
            DataTable::new(cols, vec![]),
            Err(TableError::DuplicateColumn(_))
        ));
    }

    #[test]
    fn nonconforming_value_rejected() {
        let cols = vec![Column::new("a", FieldType::Quantitative)];
        let err = DataTable::new(cols, vec![vec![Value::Text("x".into())]]).unwrap_err();
        assert!(matches!(err, TableError::Nonconforming { row: 0, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_table(
            &DataRef::Url("nope.csv".into()),
            Path::new("/nonexistent"),
            &TypeHints::new(),
        )
        .unwrap_err();
        assert!(matches!(err, TableError::Io { .. }));
    }
}
