use magres::field::FieldProfile;
use magres::radial::{assemble_fiber, island_neumann_levels, Boundary, RadialGrid, Scale};
use magres::scaling::*;
use magres::MagresError;
use num_complex::Complex64;

fn disk() -> FieldProfile {
    FieldProfile::constant_disk(1.0).unwrap()
}

fn lowest_resonance(setup: &ScalingSetup, h: f64) -> Resonance {
    let set = find_resonances(&disk(), h, (0, 0), &Window::landau(h), setup).unwrap();
    assert_eq!(set.resonances.len(), 1, "{:?}", set.resonances);
    set.resonances[0]
}

#[test]
fn contour_geometry() {
    let sp = ScalingProfile::new(0.3, 1.5, 10.0).unwrap();
    assert_eq!(sp.contour(0.75), Complex64::new(0.75, 0.0));
    let far = sp.contour(20.0);
    assert!((far - Complex64::from_polar(20.0, 0.3)).norm() < 1e-13);
    let mid = sp.contour(0.5 * (1.5 + 10.0));
    assert!((mid.arg() - 0.15).abs() < 1e-12);
    for i in 1..1000 {
        let t = i as f64 * 0.03;
        let (f, df) = sp.eval(t);
        assert!(f.arg() >= 0.0 && f.arg() <= 0.3 + 1e-15);
        assert!(df.norm() > 0.0);
    }
    assert!(ScalingProfile::new(0.8, 1.5, 10.0).is_err());
    assert!(ScalingProfile::new(0.3, 10.0, 1.5).is_err());
}

#[test]
fn zero_angle_is_the_real_fiber() {
    let grid = RadialGrid::new(30.0, 600).unwrap();
    let sp = ScalingProfile::new(0.0, 1.5, 10.0).unwrap();
    let scaled = assemble_scaled_fiber(&disk(), 1, 0.2, &sp, &grid).unwrap();
    let real = assemble_fiber(&disk(), 1, Scale::Semiclassical(0.2), &grid, Boundary::DirichletFar).unwrap();
    for (z, x) in scaled.matrix.diag.iter().zip(&real.matrix.diag) {
        assert!((z.re - x).abs() <= 1e-12 * x.abs() && z.im == 0.0);
    }
    for (z, x) in scaled.matrix.off.iter().zip(&real.matrix.off) {
        assert!((z.re - x).abs() <= 1e-12 * x.abs() && z.im == 0.0);
    }
    let spectrum = complex_spectrum(&scaled).unwrap();
    let worst = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "max |Im| = {worst}");
}

#[test]
fn scaled_matrix_is_complex_symmetric_not_hermitian() {
    let grid = RadialGrid::new(30.0, 600).unwrap();
    let sp = ScalingProfile::new(0.3, 1.5, 10.0).unwrap();
    let op = assemble_scaled_fiber(&disk(), 0, 0.2, &sp, &grid).unwrap();
    // one stored off-diagonal serves both triangles, so A = Aᵀ; complex
    // entries then rule out A = Aᴴ
    assert!(op.matrix.off.iter().any(|z| z.im.abs() > 1e-8));
    assert!(op.matrix.diag.iter().any(|z| z.im.abs() > 1e-8));
}

#[test]
fn rotated_continuum() {
    let setup = ScalingSetup::for_support(1.0);
    let spec = scaled_spectrum(&disk(), 0, 0.2, 0.3, &setup, None).unwrap();
    assert!(spec.values.iter().any(|z| z.im < -1e-6));
    // low part of the branch; high eigenvalues resolve the ramp, not the ray
    let branch: Vec<&Complex64> = spec.values.iter().filter(|z| z.norm() > 0.5 && z.norm() < 5.0).collect();
    let on_ray = branch.iter().filter(|z| (z.arg() + 0.6).abs() < 0.05).count();
    assert!(on_ray * 10 >= branch.len() * 9, "{on_ray} of {}", branch.len());

    // field-free tail: everything sits near the rotated half-line
    let free = FieldProfile::zero().restrict(1.0).unwrap();
    let spec = scaled_spectrum(&free, 0, 0.2, 0.3, &setup, None).unwrap();
    let big: Vec<&Complex64> = spec.values.iter().filter(|z| z.norm() > 0.05 && z.norm() < 5.0).collect();
    let on_ray = big.iter().filter(|z| (z.arg() + 0.6).abs() < 0.05).count();
    assert!(on_ray * 10 >= big.len() * 9, "{on_ray} of {}", big.len());
}

#[test]
fn unit_disk_resonance_at_h_one_fifth() {
    let setup = ScalingSetup::for_support(1.0);
    let set = find_resonances(&disk(), 0.2, (0, 0), &Window::landau(0.2), &setup).unwrap();
    assert_eq!(set.resonances.len(), 1);
    let r = set.resonances[0];
    assert!(r.z.im < 0.0);
    assert!(r.drift <= PAIRING_TOLERANCE * (1.0 + r.z.norm()));
    assert!(r.z.arg() > -2.0 * 0.25 && r.z.arg() < 0.0);
    assert!((r.z.re - 0.17039117).abs() < 1e-6 && (r.z.im + 0.02735251).abs() < 1e-6);
    // non-resonant eigenvalues rotate at least ten times the pairing tolerance
    assert!(set.continuum_motion >= 10.0 * PAIRING_TOLERANCE);
    assert_eq!(set.rows().len(), 1);
}

#[test]
fn resonances_approach_the_landau_level() {
    let setup = ScalingSetup::for_support(1.0);
    let zs: Vec<(f64, Complex64)> = [0.25, 0.2, 0.15].iter().map(|&h| (h, lowest_resonance(&setup, h).z)).collect();
    let rel: Vec<f64> = zs.iter().map(|(h, z)| (z.re - h).abs() / h).collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
    let logs: Vec<f64> = zs.iter().map(|(_, z)| z.im.abs().ln()).collect();
    assert!(logs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn interior_ramp_start_is_irrelevant() {
    let setup = ScalingSetup::for_support(1.0);
    let base = lowest_resonance(&setup, 0.2).z;
    let moved = ScalingSetup { r1: setup.r1 + 1.0, ..setup };
    let z = lowest_resonance(&moved, 0.2).z;
    assert!((z - base).norm() <= 1e-5 * (1.0 + base.norm()));
}

#[test]
fn resolution_doubling() {
    let setup = ScalingSetup::for_support(1.0);
    let base = lowest_resonance(&setup, 0.2).z;
    let fine = ScalingSetup { grid_n: 2 * setup.grid_n, ..setup };
    let z = lowest_resonance(&fine, 0.2).z;
    // second-order scheme at Δr = 0.01
    assert!((z - base).norm() <= 1e-5 * (1.0 + base.norm()), "moved {}", (z - base).norm());
}

#[test]
fn small_angle_misses_the_resonance() {
    let setup = ScalingSetup::for_support(1.0);
    let z = lowest_resonance(&setup, 0.2).z;
    // arg z ≈ -0.159, so θ = 0.05 leaves it behind the continuum
    let narrow = scaled_spectrum(&disk(), 0, 0.2, 0.05, &setup, None).unwrap();
    let nearest = narrow.values.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
    assert!(nearest > 1e-3, "nearest {nearest}");
    let wide = scaled_spectrum(&disk(), 0, 0.2, 0.3, &setup, Some(&Window::landau(0.2))).unwrap();
    let nearest = wide.values.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
    assert!(nearest < 1e-5);
}

#[test]
fn window_preconditions() {
    let on_continuum = Window::new(0.1, 0.3, -0.3, 0.0).unwrap();
    assert!(matches!(on_continuum.check_against(0.25), Err(MagresError::InvalidParameter { .. })));
    let upper = Window::new(0.1, 0.3, -0.01, 0.01).unwrap();
    assert!(upper.check_against(0.25).is_err());
    let setup = ScalingSetup { thetas: (0.3, 0.3), ..ScalingSetup::for_support(1.0) };
    assert!(find_resonances(&disk(), 0.2, (0, 0), &Window::landau(0.2), &setup).is_err());
}

#[test]
fn open_fields_rejected() {
    let grid = RadialGrid::new(30.0, 600).unwrap();
    let sp = ScalingProfile::new(0.3, 1.5, 10.0).unwrap();
    assert!(assemble_scaled_fiber(&FieldProfile::constant(1.0), 0, 0.2, &sp, &grid).is_err());
    let inside = ScalingProfile::new(0.3, 0.5, 10.0).unwrap();
    assert!(assemble_scaled_fiber(&disk(), 0, 0.2, &inside, &grid).is_err());
    let short = RadialGrid::new(20.0, 600).unwrap();
    assert!(assemble_scaled_fiber(&disk(), 0, 0.2, &sp, &short).is_err());
}

#[test]
fn island_state_is_theta_stable() {
    let (b, rho1, rho2) = (100.0, 1.0, 1.5);
    let h = 1.0 / b;
    let island = FieldProfile::island(rho1, rho2).unwrap();
    let target = island_neumann_levels(rho1, rho2, b, 0, None, 3000).unwrap()[0] * h * h;
    let setup = ScalingSetup::for_support(rho2);
    let near = |theta: f64| {
        let s = scaled_spectrum(&island, 0, h, theta, &setup, None).unwrap();
        s.values
            .into_iter()
            .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
            .unwrap()
    };
    let (a, b2) = (near(0.25), near(0.35));
    // its width is far below double precision at this field strength
    assert!(a.im.abs() < 1e-10 && b2.im.abs() < 1e-10);
    assert!((a - b2).norm() <= 1e-5 * (1.0 + a.norm()));
    assert!((a.re - target).abs() < 1e-4 * target);
}
