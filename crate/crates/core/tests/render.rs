mod common;

use proptest::prelude::*;

use feelgrid::chart::TimeUnit;
use feelgrid::render::{map_to_grid, select_layer, Cell, ViewportState, ZoomMode, PLOT_WIDTH};
use feelgrid::transform::LayerId;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn data_land_on_the_interpolated_pin(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r);
        let vp = random_viewport(&mut r, &chart);
        if let Err(e) = check_render(&chart, &vp) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn map_to_grid_agrees_with_exact_arithmetic(
        lo in -1000i32..1000, span in 1i32..2000, fx in 0.0f64..=1.0, fy in 0.0f64..=1.0,
        ylo in -50i32..50, yspan in 1i32..300,
    ) {
        let xw = (lo as f64 / 4.0, (lo + span) as f64 / 4.0);
        let yw = (ylo as f64, (ylo + yspan) as f64);
        // Snap into the window on a 1/64 lattice so the point is exact.
        let x = xw.0 + ((xw.1 - xw.0) * fx * 64.0).floor() / 64.0;
        let y = yw.0 + ((yw.1 - yw.0) * fy * 64.0).floor() / 64.0;
        prop_assert_eq!(map_to_grid(x, y, xw, yw).unwrap(), oracle_cell(x, y, xw, yw));
    }
}

#[test]
fn exact_halfway_rounds_away_from_zero() {
    // 53 * 3/6 = 26.5 -> 27, so column 33; 33 * 1/2 = 16.5 -> row 17.
    assert_eq!(
        map_to_grid(3.0, 5.0, (0.0, 6.0), (0.0, 10.0)).unwrap(),
        Cell::new(33, 17)
    );
    assert_eq!(oracle_cell(3.0, 5.0, (0.0, 6.0), (0.0, 10.0)), Cell::new(33, 17));
}

#[test]
fn fixture_renders_pass_the_oracle_under_every_zoom() {
    let chart = fixture("daily_visits");
    let mut vp = ViewportState::initial(&chart, PLOT_WIDTH);
    for _ in 0..6 {
        assert!(check_render(&chart, &vp).unwrap() > 0);
        match vp.zoom(&chart, ZoomMode::GeometricIn, PLOT_WIDTH) {
            Ok(v) => vp = v,
            Err(_) => break,
        }
    }
    assert_eq!(vp.active_layer, Some(LayerId(TimeUnit::Day)));
}

#[test]
fn full_extent_of_ninety_days_selects_weeks() {
    let chart = fixture("daily_visits");
    let vp = ViewportState::initial(&chart, PLOT_WIDTH);
    assert_eq!(
        select_layer(&chart, vp.x_window, PLOT_WIDTH),
        Some(LayerId(TimeUnit::Week))
    );
}
