mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use vasicek_crc::data::{business_days, interpolate_to_grid, read_panel, write_panel, Units, YieldPanel};

fn tenors(mask: &[bool]) -> Vec<usize> {
    let t: Vec<usize> = mask.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| 1 + 7 * i).collect();
    if t.is_empty() { vec![1] } else { t }
}

proptest! {
    #![proptest_config(common::cases(128))]

    #[test]
    fn canonical_csv_round_trip(
        mask in prop::collection::vec(any::<bool>(), 1..12),
        dates in 1usize..20,
        values in prop::collection::vec(prop::option::weighted(0.8, -0.5f64..0.5), 240),
        extra in prop::collection::btree_map("[a-z]{1,6}", "[a-z0-9.]{1,8}", 0..3),
    ) {
        let tau = tenors(&mask);
        let mut yields: Vec<Vec<Option<f64>>> = (0..dates)
            .map(|d| (0..tau.len()).map(|t| values[(d * tau.len() + t) % values.len()]).collect())
            .collect();
        // every date and tenor keeps at least one observation
        for d in 0..dates {
            yields[d][d % tau.len()].get_or_insert(0.01);
        }
        for t in 0..tau.len() {
            yields[t % dates][t].get_or_insert(0.02);
        }
        let mut meta: BTreeMap<String, String> = extra.into_iter().filter(|(k, _)| k != "units").collect();
        meta.insert("units".into(), "decimal".into());
        let panel = YieldPanel::new(business_days(dates), tau, yields, meta).unwrap();
        let mut first = Vec::new();
        write_panel(&mut first, &panel).unwrap();
        let back = read_panel(first.as_slice(), None).unwrap();
        prop_assert_eq!(&back, &panel);
        let mut second = Vec::new();
        write_panel(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn interpolation_reproduces_knots(
        mask in prop::collection::vec(any::<bool>(), 2..40),
        values in prop::collection::vec(-0.02f64..0.08, 40),
    ) {
        let mut tau = tenors(&mask);
        if tau.len() < 2 {
            tau.push(tau[0] + 3);
        }
        let row: Vec<f64> = tau.iter().enumerate().map(|(i, _)| values[i]).collect();
        let panel = YieldPanel::from_rows(business_days(1), tau.clone(), &[row.clone()]).unwrap();
        let m = *tau.last().unwrap() + 10;
        let grid = interpolate_to_grid(&panel, 0, m).unwrap();
        for (t, y) in tau.iter().zip(&row) {
            prop_assert_eq!(grid[t - 1], *y);
        }
    }
}

#[test]
fn percent_input_is_stored_as_decimal() {
    let text = "# units=percent\ndate,tau_days,yield\n2020-01-02,1,1.5\n2020-01-02,5,2.0\n";
    let p = read_panel(text.as_bytes(), None).unwrap();
    assert_eq!(p.metadata()["units"], "decimal");
    assert!((p.get(0, 0).unwrap() - 0.015).abs() < 1e-17);
    assert!(read_panel(text.as_bytes(), Some(Units::Decimal)).is_err());
}
