//! Exterior complex scaling of radial fibers.
//!
//! Outside the field support the angular potential is the Aharonov–Bohm
//! tail α/r, so the fiber potential continues exactly to (hm - α)²/f(t)² on
//! the deformed contour f(t) = t·e^{iθ g(t)}. The scaled fiber is complex
//! symmetric; its eigenvalues that do not move with θ are resonances.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MagresError, Result};
use crate::field::FieldProfile;
use crate::linalg::ComplexSymTridiagonal;
use crate::radial::RadialGrid;

pub const MAX_THETA: f64 = 0.7;
pub const DEFAULT_THETAS: (f64, f64) = (0.25, 0.35);
pub const DEFAULT_T0: f64 = 10.0;
/// R₁ - R₀ by default.
pub const DEFAULT_RAMP_OFFSET: f64 = 0.5;
pub const DEFAULT_POINTS: usize = 3000;
pub const PAIRING_TOLERANCE: f64 = 1e-5;
/// Points this close to the real axis are threshold or continuum artifacts.
pub const IMAG_FLOOR: f64 = 1e-10;
const CHECK_POINTS: usize = 2000;

/// Quintic smoothstep 6s⁵ - 15s⁴ + 10s³ and its derivative in s.
fn smoothstep(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        let g = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        let dg = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        (g, dg)
    }
}

/// f(t) = t·e^{iθ g(t)} with g ramping from 0 at R₁ to 1 at T₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub theta: f64,
    pub r1: f64,
    pub t0: f64,
}

impl ScalingProfile {
    /// Build and check f(t) = t (t ≤ R₁), f(t) = e^{iθ}t (t ≥ T₀),
    /// 0 ≤ arg f ≤ θ and f' ≠ 0 on a dense grid up to 2T₀.
    pub fn new(theta: f64, r1: f64, t0: f64) -> Result<Self> {
        if !(0.0..=MAX_THETA).contains(&theta) {
            return Err(invalid("theta", format!("need 0 <= theta <= {MAX_THETA}, got {theta}")));
        }
        if !(r1 > 0.0 && r1 < t0 && t0.is_finite()) {
            return Err(invalid("r1", format!("need 0 < R1 < T0, got R1 = {r1}, T0 = {t0}")));
        }
        let sp = Self { theta, r1, t0 };
        let rotation = Complex64::from_polar(1.0, theta);
        for i in 1..=CHECK_POINTS {
            let t = 2.0 * t0 * i as f64 / CHECK_POINTS as f64;
            let (f, df) = sp.eval(t);
            let arg = f.arg();
            let ok = if t <= r1 {
                f == Complex64::new(t, 0.0)
            } else if t >= t0 {
                (f - rotation * t).norm() <= 1e-14 * t
            } else {
                true
            };
            if !ok || arg < -1e-15 || arg > theta + 1e-15 || df.norm() == 0.0 {
                return Err(invalid("theta", format!("scaling profile invalid at t = {t}")));
            }
        }
        Ok(sp)
    }

    /// (f(t), f'(t)).
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let width = self.t0 - self.r1;
        let (g, dg) = smoothstep((t - self.r1) / width);
        let phase = Complex64::from_polar(1.0, self.theta * g);
        let f = phase * t;
        let df = phase * Complex64::new(1.0, self.theta * t * dg / width);
        (f, df)
    }

    pub fn contour(&self, t: f64) -> Complex64 {
        self.eval(t).0
    }
}

/// Scaled fiber in one sector.
#[derive(Debug, Clone)]
pub struct ScaledFiber {
    pub m: i64,
    pub h: f64,
    pub scaling: ScalingProfile,
    pub grid: RadialGrid,
    pub matrix: ComplexSymTridiagonal,
}

/// Assemble h²(-(1/ff') d/dt (f/f') d/dt) + W(f) on `grid` with Dirichlet at r_max.
pub fn assemble_scaled_fiber(
    profile: &FieldProfile,
    m: i64,
    h: f64,
    sp: &ScalingProfile,
    grid: &RadialGrid,
) -> Result<ScaledFiber> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MagresError::NotPositive { quantity: "h", value: h });
    }
    if !profile.is_compact() {
        return Err(invalid("profile", "complex scaling needs a compactly supported field"));
    }
    if sp.r1 <= profile.support() {
        return Err(invalid(
            "r1",
            format!("deformation starts at R1 = {} inside the field support R0 = {}", sp.r1, profile.support()),
        ));
    }
    if grid.r_max() < 3.0 * sp.t0 * (1.0 - 1e-12) {
        return Err(invalid(
            "r_max",
            format!("need r_max >= 3 T0 = {}, got {}", 3.0 * sp.t0, grid.r_max()),
        ));
    }
    let n = grid.len();
    let dt = grid.dr();
    let h2 = h * h;
    let alpha = profile.flux();
    let tail = (h * m as f64 - alpha).powi(2);

    // q = f/f' on faces, w = f·f' on nodes
    let q: Vec<Complex64> = (0..=n)
        .map(|j| {
            if j == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let (f, df) = sp.eval(grid.face(j));
                f / df
            }
        })
        .collect();
    let mut w = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for j in 0..n {
        let t = grid.node(j);
        let (f, df) = sp.eval(t);
        w.push(f * df);
        let v = if t <= sp.r1 {
            let x = h * m as f64 / t - profile.potential(t);
            Complex64::new(x * x, 0.0)
        } else {
            tail / (f * f)
        };
        potential.push(v);
    }
    let sqrt_w: Vec<Complex64> = w.iter().map(|x| x.sqrt()).collect();
    let diag: Vec<Complex64> = (0..n)
        .map(|j| {
            let flux = if j + 1 < n {
                q[j] + q[j + 1]
            } else {
                q[j] + q[j + 1] * 2.0
            };
            flux * h2 / (w[j] * dt * dt) + potential[j]
        })
        .collect();
    let off: Vec<Complex64> = (0..n - 1)
        .map(|j| -q[j + 1] * h2 / (sqrt_w[j] * sqrt_w[j + 1] * dt * dt))
        .collect();
    Ok(ScaledFiber {
        m,
        h,
        scaling: *sp,
        grid: *grid,
        matrix: ComplexSymTridiagonal::new(diag, off)?,
    })
}

fn by_re_im(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All eigenvalues of the scaled fiber, ordered by (Re, Im).
pub fn complex_spectrum(op: &ScaledFiber) -> Result<Vec<Complex64>> {
    let mut values = op.matrix.eigenvalues()?;
    values.sort_by(by_re_im);
    Ok(values)
}

/// Closed rectangle [re_lo, re_hi] + i[im_lo, im_hi] in the energy plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Window {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        if !(re_lo < re_hi && im_lo < im_hi) || ![re_lo, re_hi, im_lo, im_hi].iter().all(|x| x.is_finite()) {
            return Err(invalid("window", format!("degenerate window [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]")));
        }
        Ok(Self { re_lo, re_hi, im_lo, im_hi })
    }

    /// Re ∈ [0.6h, 1.4h], Im ∈ [-0.28h, 0]: the lowest Landau resonance of a
    /// unit disk.
    pub fn landau(h: f64) -> Self {
        Self {
            re_lo: 0.6 * h,
            re_hi: 1.4 * h,
            im_lo: -0.28 * h,
            im_hi: 0.0,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    /// Check that the window sits in the lower half plane strictly above the
    /// rotated continuum e^{-2iθ}[0, ∞).
    pub fn check_against(&self, theta_min: f64) -> Result<()> {
        if self.im_hi > 0.0 {
            return Err(invalid("window", "window must lie in Im z <= 0"));
        }
        if self.re_lo <= 0.0 {
            return Err(invalid("window", "window must lie in Re z > 0"));
        }
        let corner = self.im_lo.atan2(self.re_lo);
        if corner <= -2.0 * theta_min {
            return Err(invalid(
                "window",
                format!(
                    "window reaches arg z = {corner:.4} below the rotated continuum at {:.4}",
                    -2.0 * theta_min
                ),
            ));
        }
        Ok(())
    }
}

/// Spectrum of one sector at one angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSpectrum {
    pub m: i64,
    pub h: f64,
    pub theta: f64,
    pub grid_n: usize,
    pub values: Vec<Complex64>,
}

/// θ-robust eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub z: Complex64,
    pub m: i64,
    pub h: f64,
    pub thetas: (f64, f64),
    pub drift: f64,
    pub grid_n: usize,
}

/// Pair windowed eigenvalues of two angles within `tol·(1 + |z|)`.
pub fn filter_resonances(
    first: &ScaledSpectrum,
    second: &ScaledSpectrum,
    tol: f64,
    window: &Window,
) -> Result<Vec<Resonance>> {
    if first.theta == second.theta {
        return Err(invalid("theta", "the two scaling angles must differ"));
    }
    if first.m != second.m || first.h != second.h {
        return Err(invalid("spectra", "spectra belong to different sectors or h"));
    }
    window.check_against(first.theta.min(second.theta))?;
    let mut out = Vec::new();
    for &z in first.values.iter().filter(|z| window.contains(**z)) {
        if z.im > -IMAG_FLOOR {
            continue;
        }
        let bound = tol * (1.0 + z.norm());
        let partners: Vec<Complex64> = second
            .values
            .iter()
            .copied()
            .filter(|w| (w - z).norm() <= bound)
            .collect();
        match partners.as_slice() {
            [] => {}
            [w] => out.push(Resonance {
                z,
                m: first.m,
                h: first.h,
                thetas: (first.theta, second.theta),
                drift: (w - z).norm(),
                grid_n: first.grid_n,
            }),
            _ => {
                return Err(MagresError::AmbiguousPairing {
                    re: z.re,
                    im: z.im,
                    count: partners.len(),
                })
            }
        }
    }
    out.sort_by(|a, b| by_re_im(&a.z, &b.z));
    Ok(out)
}

/// Contour geometry and resolution of a resonance search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSetup {
    pub thetas: (f64, f64),
    pub r1: f64,
    pub t0: f64,
    pub r_max: f64,
    pub grid_n: usize,
    pub tolerance: f64,
}

impl ScalingSetup {
    /// θ = (0.25, 0.35), R₁ = R₀ + 0.5, T₀ = 10, r_max = 3T₀, N = 3000.
    pub fn for_support(r0: f64) -> Self {
        let t0 = DEFAULT_T0.max(r0 + 2.0);
        Self {
            thetas: DEFAULT_THETAS,
            r1: r0 + DEFAULT_RAMP_OFFSET,
            t0,
            r_max: 3.0 * t0,
            grid_n: DEFAULT_POINTS,
            tolerance: PAIRING_TOLERANCE,
        }
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.r_max, self.grid_n)
    }

    pub fn profile(&self, theta: f64) -> Result<ScalingProfile> {
        ScalingProfile::new(theta, self.r1, self.t0)
    }
}

/// Resonances over several sectors, plus the smallest θ-motion among the
/// non-resonant eigenvalues near the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub h: f64,
    pub setup: ScalingSetup,
    pub window: Window,
    pub resonances: Vec<Resonance>,
    /// min over rejected eigenvalues z with |z| ≤ 2|window| of
    /// dist(z, spectrum at θ₂) / (1 + |z|).
    pub continuum_motion: f64,
}

impl ResonanceSet {
    /// Rows (m, h, theta1, theta2, reZ, imZ, drift, gridN).
    pub fn rows(&self) -> Vec<(i64, f64, f64, f64, f64, f64, f64, usize)> {
        self.resonances
            .iter()
            .map(|r| (r.m, r.h, r.thetas.0, r.thetas.1, r.z.re, r.z.im, r.drift, r.grid_n))
            .collect()
    }
}

/// Spectrum of one sector at one angle with the windowed eigenvalues polished
/// by inverse iteration.
pub fn scaled_spectrum(
    profile: &FieldProfile,
    m: i64,
    h: f64,
    theta: f64,
    setup: &ScalingSetup,
    window: Option<&Window>,
) -> Result<ScaledSpectrum> {
    let grid = setup.grid()?;
    let sp = setup.profile(theta)?;
    let op = assemble_scaled_fiber(profile, m, h, &sp, &grid)?;
    let mut values = complex_spectrum(&op)?;
    if let Some(window) = window {
        for z in values.iter_mut().filter(|z| window.contains(**z)) {
            if let Ok((polished, _)) = op.matrix.refine(*z) {
                if (polished - *z).norm() <= 1e-6 * (1.0 + z.norm()) {
                    *z = polished;
                }
            }
        }
        values.sort_by(by_re_im);
    }
    Ok(ScaledSpectrum {
        m,
        h,
        theta,
        grid_n: grid.len(),
        values,
    })
}

/// Resonances of `profile` at `h` in every sector of `m_range` inside `window`.
pub fn find_resonances(
    profile: &FieldProfile,
    h: f64,
    m_range: (i64, i64),
    window: &Window,
    setup: &ScalingSetup,
) -> Result<ResonanceSet> {
    let (t1, t2) = setup.thetas;
    if t1 == t2 {
        return Err(invalid("theta", "the two scaling angles must differ"));
    }
    if m_range.0 > m_range.1 {
        return Err(invalid("m_range", "empty sector range"));
    }
    window.check_against(t1.min(t2))?;
    let jobs: Vec<(i64, f64)> = (m_range.0..=m_range.1)
        .flat_map(|m| [(m, t1), (m, t2)])
        .collect();
    let spectra: Vec<Result<ScaledSpectrum>> = jobs
        .par_iter()
        .map(|&(m, theta)| scaled_spectrum(profile, m, h, theta, setup, Some(window)))
        .collect();
    let spectra: Vec<ScaledSpectrum> = spectra.into_iter().collect::<Result<_>>()?;
    let mut resonances = Vec::new();
    let mut motion = f64::INFINITY;
    let reach = 2.0 * Complex64::new(window.re_hi, window.im_lo).norm();
    for pair in spectra.chunks(2) {
        let found = filter_resonances(&pair[0], &pair[1], setup.tolerance, window)?;
        for z in pair[0].values.iter().filter(|z| z.norm() <= reach) {
            if found.iter().any(|r| r.z == *z) {
                continue;
            }
            let nearest = pair[1]
                .values
                .iter()
                .map(|w| (w - z).norm())
                .fold(f64::INFINITY, f64::min);
            motion = motion.min(nearest / (1.0 + z.norm()));
        }
        resonances.extend(found);
    }
    resonances.sort_by(|a, b| by_re_im(&a.z, &b.z).then(a.m.cmp(&b.m)));
    Ok(ResonanceSet {
        h,
        setup: *setup,
        window: *window,
        resonances,
        continuum_motion: motion,
    })
}
