//! Chart model: spec parsing, typed tables, loading, and the catalogue.

pub mod catalogue;
pub mod spec;
pub mod table;
pub mod value;

use std::path::Path;

pub use catalogue::{scan_catalogue, CatalogueEntry, CatalogueError, ChartCatalogue, SkippedFile};
pub use spec::{parse_spec, parse_spec_with_warnings, ChartSpec, FieldDef, Mark, ParseError, ScaleDomain};
pub use table::{load_table, Column, DataRef, DataTable, TableError};
pub use value::{FieldType, TimeUnit, TimeValue, Value};

use crate::transform::{apply_transforms, build_hierarchy, LayerId, ResolutionLayer, TransformError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// A parsed spec with its transformed data and any resolution layers.
#[derive(Debug, Clone)]
pub struct LoadedChart {
    pub spec: ChartSpec,
    /// Rows after all declared transforms.
    pub table: DataTable,
    /// Resolution layers, coarse to fine. Empty when none are declared.
    pub layers: Vec<ResolutionLayer>,
}

impl LoadedChart {
    /// Load data for `spec`, resolving file references against `base_dir`.
    pub fn load(spec: ChartSpec, base_dir: &Path) -> Result<Self, LoadError> {
        let raw = load_table(&spec.data, base_dir, &spec.type_hints())?;
        Self::from_table(spec, raw)
    }

    /// Build from an already-typed source table.
    pub fn from_table(spec: ChartSpec, raw: DataTable) -> Result<Self, LoadError> {
        let fields: Vec<String> = raw.columns().iter().map(|c| c.name.clone()).collect();
        spec::check_schema(&spec, fields)?;
        let table = apply_transforms(&raw, &spec.transforms)?;
        for (channel, def) in [
            ("x", Some(&spec.x)),
            ("y", Some(&spec.y)),
            ("series", spec.series.as_ref()),
        ] {
            let Some(def) = def else { continue };
            let col = table.column(&def.field).ok_or_else(|| ParseError::SchemaMismatch {
                channel: channel.into(),
                field: def.field.clone(),
            })?;
            let compatible = match def.ty {
                FieldType::Quantitative => col.ty == FieldType::Quantitative,
                FieldType::Temporal => col.ty == FieldType::Temporal,
                FieldType::Ordinal | FieldType::Nominal => true,
            };
            if !compatible {
                return Err(ParseError::InvalidField {
                    channel: channel.into(),
                    reason: format!(
                        "column {:?} is {}, encoding says {}",
                        def.field,
                        col.ty.as_str(),
                        def.ty.as_str()
                    ),
                }
                .into());
            }
        }
        let layers = match &spec.layers {
            None => Vec::new(),
            Some(res) => {
                let mut groupby = vec![spec.x.field.clone()];
                if let Some(s) = &spec.series {
                    groupby.push(s.field.clone());
                }
                build_hierarchy(&table, &res.units, res.op, &spec.y.field, &groupby)?
            }
        };
        Ok(Self { spec, table, layers })
    }

    /// Parse and load a spec file; data paths resolve next to it.
    pub fn from_path(path: &Path) -> Result<Self, LoadError> {
        let bytes = std::fs::read(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = parse_spec(&bytes)?;
        Self::load(spec, path.parent().unwrap_or(Path::new(".")))
    }

    /// Table for a layer; `None` (or an unknown layer) is the base table.
    pub fn table_for(&self, layer: Option<LayerId>) -> &DataTable {
        layer
            .and_then(|id| self.layers.iter().find(|l| l.id == id))
            .map_or(&self.table, |l| &l.table)
    }

    pub fn layer_ids(&self) -> Vec<LayerId> {
        self.layers.iter().map(|l| l.id).collect()
    }

    /// Display precision for the y channel.
    pub fn y_decimals(&self) -> usize {
        self.spec
            .y
            .decimals
            .or_else(|| self.table.column(&self.spec.y.field).map(|c| c.decimals))
            .unwrap_or(0)
    }

    /// Format a y value with its unit, e.g. "0.25%".
    pub fn format_y(&self, v: f64) -> String {
        format_with_unit(&value::format_number(v, self.y_decimals()), self.spec.y.unit.as_deref())
    }
}

/// Attach a unit: "%" binds tightly, words get a space.
pub fn format_with_unit(number: &str, unit: Option<&str>) -> String {
    match unit {
        None | Some("") => number.to_string(),
        Some(u) if u == "%" || u.starts_with('°') => format!("{number}{u}"),
        Some(u) => format!("{number} {u}"),
    }
}
