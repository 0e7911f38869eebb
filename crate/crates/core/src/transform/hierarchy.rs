use std::fmt;

use serde::{Deserialize, Serialize};

use super::{aggregate, AggregateOp, TransformError};
use crate::chart::table::DataTable;
use crate::chart::value::{FieldType, TimeUnit};

/// Identifies one resolution layer; layers are keyed by their time unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerId(pub TimeUnit);

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The base table re-aggregated at one calendar resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionLayer {
    pub id: LayerId,
    pub time_unit: TimeUnit,
    pub table: DataTable,
    pub point_count: usize,
}

/// Pre-compute one aggregated layer per unit, coarse to fine.
///
/// The first `groupby` column must be temporal; it is bucketed at each unit
/// and any further columns (e.g. a series field) are kept as group keys. The
/// aggregated value keeps the name of `field`, so encodings stay valid on
/// every layer.
pub fn build_hierarchy(
    table: &DataTable,
    units: &[TimeUnit],
    op: AggregateOp,
    field: &str,
    groupby: &[String],
) -> Result<Vec<ResolutionLayer>, TransformError> {
    let time_col = groupby
        .first()
        .ok_or_else(|| TransformError::NonTemporalGroupBy(String::new()))?;
    let col = table
        .column(time_col)
        .ok_or_else(|| TransformError::UnknownColumn(time_col.clone()))?;
    if col.ty != FieldType::Temporal {
        return Err(TransformError::NonTemporalGroupBy(time_col.clone()));
    }
    if units.is_empty() || units.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TransformError::UnsortedUnits(units.to_vec()));
    }
    units
        .iter()
        .map(|&unit| {
            let t = aggregate(table, op, Some(field), groupby, Some(unit), field)?;
            Ok(ResolutionLayer {
                id: LayerId(unit),
                time_unit: unit,
                point_count: t.row_count(),
                table: t,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::table::{parse_csv, TypeHints};
    use crate::chart::value::Value;

    fn daily() -> DataTable {
        let hints: TypeHints = [("day".to_string(), FieldType::Temporal)].into();
        parse_csv(include_str!("../../../../data/catalogue/daily_visits.csv"), &hints).unwrap()
    }

    #[test]
    fn ninety_days_give_three_months_thirteen_weeks() {
        let layers = build_hierarchy(
            &daily(),
            &[TimeUnit::Month, TimeUnit::Week, TimeUnit::Day],
            AggregateOp::Mean,
            "visits",
            &["day".into()],
        )
        .unwrap();
        let counts: Vec<usize> = layers.iter().map(|l| l.point_count).collect();
        assert_eq!(counts, [3, 13, 90]);
    }

    #[test]
    fn native_grain_layer_equals_base_values() {
        let base = daily();
        let layers = build_hierarchy(&base, &[TimeUnit::Day], AggregateOp::Mean, "visits", &["day".into()]).unwrap();
        let got: Vec<&Value> = layers[0].table.values("visits").unwrap().collect();
        let want: Vec<&Value> = base.values("visits").unwrap().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn single_row_table_gives_single_row_layers() {
        let hints: TypeHints = [("day".to_string(), FieldType::Temporal)].into();
        let t = parse_csv("day,v\n2021-03-04,5\n", &hints).unwrap();
        let layers = build_hierarchy(
            &t,
            &[TimeUnit::Year, TimeUnit::Month, TimeUnit::Day],
            AggregateOp::Sum,
            "v",
            &["day".into()],
        )
        .unwrap();
        assert!(layers.iter().all(|l| l.point_count == 1));
    }

    #[test]
    fn rejects_non_temporal_and_unsorted() {
        let t = parse_csv("g,v\na,1\n", &TypeHints::new()).unwrap();
        assert!(matches!(
            build_hierarchy(&t, &[TimeUnit::Day], AggregateOp::Sum, "v", &["g".into()]),
            Err(TransformError::NonTemporalGroupBy(_))
        ));
        assert!(matches!(
            build_hierarchy(
                &daily(),
                &[TimeUnit::Day, TimeUnit::Month],
                AggregateOp::Sum,
                "visits",
                &["day".into()]
            ),
            Err(TransformError::UnsortedUnits(_))
        ));
    }
}
