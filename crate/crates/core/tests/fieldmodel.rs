use magres::field::{FieldKind, FieldProfile, FieldSpec, PowerPiece};
use proptest::prelude::*;

/// Composite Simpson rule for ∫ s B(s) ds on [lo, hi], splitting at piece
/// boundaries so the integrand is smooth on every panel.
fn moment_quadrature(profile: &FieldProfile, hi: f64) -> f64 {
    let mut cuts = vec![0.0, hi];
    for p in profile.pieces() {
        for x in [p.start, p.end] {
            if x > 0.0 && x < hi {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = 2000;
        let dx = (b - a) / n as f64;
        // sample strictly inside the panel to avoid the jump at its ends
        let f = |s: f64| s * profile.field(s.clamp(a + 1e-12, b - 1e-12));
        let mut sum = f(a) + f(b);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * dx);
        }
        total += sum * dx / 3.0;
    }
    total
}

fn pieces() -> impl Strategy<Value = FieldProfile> {
    prop::collection::vec((-2.0f64..2.0, 0.0f64..3.0, 0.0f64..2.0, 0.1f64..1.5), 1..4).prop_map(|raw| {
        let pieces: Vec<PowerPiece> = raw
            .into_iter()
            .map(|(coeff, power, start, len)| PowerPiece {
                coeff,
                power,
                start,
                end: start + len,
            })
            .collect();
        let support = pieces.iter().map(|p| p.end).fold(0.0, f64::max);
        FieldProfile::from_pieces(pieces, support).unwrap()
    })
}

#[test]
fn potential_examples() {
    let disk = FieldProfile::constant_disk(1.0).unwrap();
    assert_eq!(disk.flux(), 0.5);
    assert!((disk.angular_potential(0.5).unwrap() - 0.25).abs() < 1e-15);
    assert!((disk.angular_potential(3.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!((disk.angular_potential(1.0).unwrap() - disk.flux()).abs() < 1e-15);

    let island = FieldProfile::island(1.0, f64::INFINITY).unwrap();
    assert!((island.angular_potential(2.0).unwrap() - 0.75).abs() < 1e-15);
    let restricted = island.restrict(2.0).unwrap();
    assert!((restricted.flux() - 1.5).abs() < 1e-14);

    let ah = FieldProfile::anharmonic(2.0).unwrap();
    assert!((ah.angular_potential(1.0).unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(FieldProfile::zero().flux(), 0.0);
}

#[test]
fn potential_vanishes_at_origin() {
    for p in [
        FieldProfile::constant_disk(1.0).unwrap(),
        FieldProfile::anharmonic(0.5).unwrap(),
        FieldProfile::radial_well(2.0).unwrap(),
    ] {
        assert!(p.angular_potential(1e-9).unwrap().abs() < 1e-8);
    }
}

#[test]
fn identical_fields_give_identical_potentials() {
    let a = FieldProfile::constant_disk(1.5).unwrap();
    let b = FieldProfile::from_pieces(
        vec![
            PowerPiece { coeff: 1.0, power: 0.0, start: 0.0, end: 0.7 },
            PowerPiece { coeff: 1.0, power: 0.0, start: 0.7, end: 1.5 },
        ],
        1.5,
    )
    .unwrap();
    for i in 1..400 {
        let r = i as f64 * 0.01;
        assert!((a.angular_potential(r).unwrap() - b.angular_potential(r).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn config_files_load() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let root = std::path::Path::new(dir).join("../../configs");
    let disk = FieldSpec::load(&root.join("constant_disk.json")).unwrap();
    assert_eq!(disk.kind, FieldKind::ConstantDisk);
    let island = FieldSpec::load(&root.join("island.json")).unwrap();
    let p = FieldProfile::from_spec(&island).unwrap();
    assert_eq!(p.support(), 1.5);
    let err = FieldSpec::load(&root.join("missing.json")).unwrap_err().to_string();
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn full_plane_kinds_cut_at_support() {
    let spec = FieldSpec::new(FieldKind::WellRadial, &[("b0", 1.0)], Some(2.0));
    let p = FieldProfile::from_spec(&spec).unwrap();
    assert!(p.is_compact());
    assert_eq!(p.field(2.5), 0.0);
    assert!((p.flux() - (2.0 + 4.0)).abs() < 1e-12);
    let open = FieldSpec::new(FieldKind::Anharmonic, &[("gamma", 1.0)], None);
    assert!(!FieldProfile::from_spec(&open).unwrap().is_compact());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aharonov_bohm_tail(profile in pieces(), extra in 0.0f64..20.0) {
        let r = profile.support() + extra;
        let alpha = profile.flux();
        let a = profile.angular_potential(r).unwrap();
        prop_assert!((a - alpha / r).abs() < 1e-12 * (1.0 + (alpha / r).abs()));
    }

    #[test]
    fn flux_matches_quadrature(profile in pieces()) {
        let q = moment_quadrature(&profile, profile.support());
        prop_assert!((profile.flux() - q).abs() < 1e-8 * (1.0 + q.abs()), "{} vs {q}", profile.flux());
    }

    #[test]
    fn flux_is_additive(r1 in 0.2f64..2.0, gap in 0.0f64..1.0, width in 0.1f64..2.0, p in 0.0f64..2.0) {
        let inner = FieldProfile::constant_disk(r1).unwrap();
        let outer = FieldProfile::from_pieces(
            vec![PowerPiece { coeff: 1.0, power: p, start: r1 + gap, end: r1 + gap + width }],
            r1 + gap + width,
        ).unwrap();
        let sum = inner.superpose(&outer);
        let expected = moment_quadrature(&inner, r1) + moment_quadrature(&outer, r1 + gap + width);
        prop_assert!((sum.flux() - expected).abs() < 1e-8 * (1.0 + expected));
        prop_assert!((sum.flux() - inner.flux() - outer.flux()).abs() < 1e-13 * (1.0 + expected));
    }

    #[test]
    fn potential_is_moment_over_radius(profile in pieces(), r in 0.05f64..4.0) {
        let q = moment_quadrature(&profile, r) / r;
        let a = profile.angular_potential(r).unwrap();
        prop_assert!((a - q).abs() < 1e-8 * (1.0 + q.abs()));
    }

    #[test]
    fn spec_json_round_trip(r0 in 0.1f64..5.0, scale in 1.0f64..3.0) {
        let spec = FieldSpec::new(FieldKind::ConstantDisk, &[("r0", r0)], Some(r0 * scale));
        let back = FieldSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}
