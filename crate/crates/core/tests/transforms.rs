mod common;

use proptest::prelude::*;

use feelgrid::chart::table::parse_csv;
use feelgrid::chart::{FieldType, TimeUnit};
use feelgrid::transform::{build_hierarchy, jitter, AggregateOp};

use common::*;

fn hints() -> feelgrid::chart::table::TypeHints {
    [("day".to_string(), FieldType::Temporal)].into()
}

const UNITS: [(TimeUnit, &str); 3] = [
    (TimeUnit::Month, "month"),
    (TimeUnit::Week, "week"),
    (TimeUnit::Day, "day"),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sums_and_counts_are_conserved_on_every_layer(seed in any::<u64>()) {
        let (csv, rows) = random_daily_csv(&mut rng(seed));
        let table = parse_csv(&csv, &hints()).unwrap();
        let units: Vec<TimeUnit> = UNITS.iter().map(|u| u.0).collect();
        let total: f64 = rows.iter().filter_map(|r| r.1).sum();
        let present = rows.iter().filter(|r| r.1.is_some()).count() as f64;
        for (op, want) in [(AggregateOp::Sum, total), (AggregateOp::Count, present)] {
            for layer in build_hierarchy(&table, &units, op, "visits", &["day".into()]).unwrap() {
                let got: f64 = layer_values(&layer.table).iter().filter_map(|v| v.1).sum();
                prop_assert_eq!(got, want, "{:?} {:?}", op, layer.id);
            }
        }
    }

    #[test]
    fn mean_layers_match_bucket_means(seed in any::<u64>()) {
        let (csv, rows) = random_daily_csv(&mut rng(seed));
        let table = parse_csv(&csv, &hints()).unwrap();
        let units: Vec<TimeUnit> = UNITS.iter().map(|u| u.0).collect();
        let layers = build_hierarchy(&table, &units, AggregateOp::Mean, "visits", &["day".into()]).unwrap();
        for (layer, (_, name)) in layers.iter().zip(UNITS) {
            let want: Vec<_> = bucket_totals(&rows, name)
                .into_iter()
                .map(|(d, (s, n))| (d, (n > 0).then(|| s / n as f64)))
                .collect();
            let got = layer_values(&layer.table);
            prop_assert_eq!(got.len(), want.len());
            for ((gd, gv), (wd, wv)) in got.iter().zip(&want) {
                prop_assert_eq!(gd, wd);
                match (gv, wv) {
                    (Some(g), Some(w)) => prop_assert!((g - w).abs() <= 1e-9, "{} {} vs {}", gd, g, w),
                    (None, None) => {}
                    other => prop_assert!(false, "{} {:?}", gd, other),
                }
            }
        }
    }

    #[test]
    fn jitter_is_reproducible_and_bounded(seed in any::<u64>(), amp in 0.01f64..50.0) {
        let (csv, _) = random_daily_csv(&mut rng(seed));
        let table = parse_csv(&csv, &hints()).unwrap();
        let a = jitter(&table, "visits", amp, seed).unwrap();
        prop_assert_eq!(&a, &jitter(&table, "visits", amp, seed).unwrap());
        for (before, after) in table.values("visits").unwrap().zip(a.values("visits").unwrap()) {
            match (before.as_f64(), after.as_f64()) {
                (Some(b), Some(x)) => prop_assert!((x - b).abs() <= amp),
                (None, None) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }
}

#[test]
fn different_seeds_move_values_differently() {
    let (csv, _) = random_daily_csv(&mut rng(7));
    let table = parse_csv(&csv, &hints()).unwrap();
    if table.row_count() > 3 {
        assert_ne!(
            jitter(&table, "visits", 5.0, 1).unwrap(),
            jitter(&table, "visits", 5.0, 2).unwrap()
        );
    }
}
