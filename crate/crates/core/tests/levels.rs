use magres::levels::*;
use magres::radial::RadialGrid;
use magres::MagresError;
use proptest::prelude::*;

/// j_{0,1}², the first Dirichlet eigenvalue of the unit disk.
const J01_SQ: f64 = 5.783185962946784;

#[test]
fn island_reference_is_the_bessel_level() {
    let ells = island_reference(1.0, 2).unwrap();
    assert!((ells[0] - J01_SQ).abs() < 1e-6);
    let half = island_reference(2.0, 0).unwrap();
    assert!((half[0] - J01_SQ / 4.0).abs() < 1e-6);
    assert!(ells.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn well_comparison() {
    let grid = well_grid().unwrap();
    let samples = well_samples(1.0, 0, &[0.1, 0.05, 0.025], &grid).unwrap();
    let report = compare(&samples).unwrap();
    let rows = report.rows_for("well", 0);
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1].difference.abs() < w[0].difference.abs()));
    for r in &rows[1..] {
        assert!(r.ratio >= 4.0 && r.ratio <= 16.0, "ratio {}", r.ratio);
    }
    assert_eq!(rows[0].expected_order, Some(3.0));
    // the measured h² coefficient climbs toward 2, half the closed-form 4
    let coeff: Vec<f64> = rows.iter().map(|r| (r.direct - r.h) / (r.h * r.h)).collect();
    assert!(coeff.windows(2).all(|w| w[1] > w[0]) && coeff[2] < 2.0 && coeff[2] > 1.8, "{coeff:?}");
}

#[test]
fn island_comparison() {
    let samples = island_samples(1.0, 1.5, 0, &[25.0, 50.0, 100.0], 3000).unwrap();
    let report = compare(&samples).unwrap();
    let rows = report.rows_for("island", 0);
    // ℓ̂₀ rises toward ℓ₀ from below
    assert!(rows.iter().all(|r| r.direct < r.expansion));
    let scaled: Vec<f64> = rows.iter().map(|r| r.direct / (r.h * r.h)).collect();
    assert!(scaled.windows(2).all(|w| w[1] > w[0]), "{scaled:?}");
}

#[test]
fn anharmonic_comparison() {
    let grid = RadialGrid::new(6.0, 6000).unwrap();
    let samples = anharmonic_samples(2.0, 0, &[0.2, 0.1, 0.05], &grid).unwrap();
    let report = compare(&samples).unwrap();
    for r in report.rows_for("anharmonic", 0) {
        assert!((r.difference / r.expansion).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn anharmonic_exponents() {
    assert_eq!(anharmonic_exponent(0.0), 1.0);
    assert!((anharmonic_exponent(2.0) - 1.5).abs() < 1e-15);
    assert!(anharmonic_exponent(1e6) < 2.0 && anharmonic_exponent(1e6) > 1.999);
    let data = ModelData::Island { ells: vec![1.0] };
    assert_eq!(data.leading_exponent(), 2.0);
    assert_eq!(ModelData::Landau.remainder_order(), None);
}

#[test]
fn mixed_groups_need_three_each() {
    let mut s: Vec<_> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| (ExpansionParams::new(0, h, ModelData::Landau), h + h * h))
        .collect();
    s.push((ExpansionParams::new(1, 0.1, ModelData::Landau), 0.31));
    assert!(matches!(compare(&s), Err(MagresError::InsufficientSamples { needed: 3, got: 1 })));
    // repeated h do not count twice
    s.pop();
    s.push((ExpansionParams::new(0, 0.1, ModelData::Landau), 0.11));
    assert_eq!(compare(&s).unwrap().rows.len(), 3);
}

fn model() -> impl Strategy<Value = ModelData> {
    prop_oneof![
        Just(ModelData::Landau),
        (0.1f64..5.0).prop_map(radial_well_data),
        prop::collection::vec(0.1f64..50.0, 6).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            ModelData::Island { ells: v }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_increases_with_n(data in model(), h in 0.001f64..0.5, n in 0usize..5) {
        let lo = expansion_real_part(&ExpansionParams::new(n, h, data.clone())).unwrap();
        let hi = expansion_real_part(&ExpansionParams::new(n + 1, h, data)).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn params_json_round_trip(data in model(), h in 0.001f64..0.5, n in 0usize..5) {
        let p = ExpansionParams::new(n, h, data);
        let text = serde_json::to_string(&p).unwrap();
        let back: ExpansionParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn exact_power_law_is_recovered(order in 1.5f64..4.0, k in 0.1f64..5.0) {
        let s: Vec<_> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (ExpansionParams::new(0, h, ModelData::Landau), h + k * h.powf(order)))
            .collect();
        let report = compare(&s).unwrap();
        prop_assert!((report.rows[0].observed_order - order).abs() < 1e-9);
    }
}
