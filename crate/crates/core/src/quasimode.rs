//! Cut-off quasimodes, their residuals, and Tang–Zworski windows.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MagresError, Result};
use crate::field::FieldProfile;
use crate::radial::{assemble_fiber, EigenResult, RadialGrid};

pub const DEFAULT_DELTA: f64 = 0.2;
/// Minimum number of cells across the cutoff shoulder.
pub const SHOULDER_CELLS: f64 = 16.0;

/// Associated Laguerre polynomial L_n^k(x) by the three-term recurrence.
pub fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn log_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// C_{n,m} with ‖C r^{|m|} e^{-br²/4} L_n^{|m|}(br²/2) e^{imφ}‖_{L²(ℝ²)} = 1.
pub fn landau_normalization(n: usize, m: i64, b: f64) -> f64 {
    let k = m.unsigned_abs() as usize;
    let log_c2 = (k as f64 + 1.0) * b.ln() + log_factorial(n)
        - (2.0 * PI).ln()
        - k as f64 * 2f64.ln()
        - log_factorial(n + k);
    (0.5 * log_c2).exp()
}

/// Energy of ψ_{n,m} for -Δ + (m/r - br/2)²: b(2n + 1 + |m| - m).
pub fn landau_energy(n: usize, m: i64, b: f64) -> f64 {
    b * (2 * n) as f64 + b * (1 + m.abs() - m) as f64
}

/// Radial factor C r^{|m|} e^{-br²/4} L_n^{|m|}(br²/2).
pub fn landau_radial(n: usize, m: i64, b: f64, r: f64) -> f64 {
    let k = m.unsigned_abs() as i32;
    let x = 0.5 * b * r * r;
    landau_normalization(n, m, b) * r.powi(k) * (-0.5 * x).exp() * laguerre(n, k as f64, x)
}

/// d/dr of [`landau_radial`], using d/dx L_n^k = -L_{n-1}^{k+1}.
pub fn landau_radial_derivative(n: usize, m: i64, b: f64, r: f64) -> f64 {
    let k = m.unsigned_abs() as i32;
    let x = 0.5 * b * r * r;
    let c = landau_normalization(n, m, b);
    let envelope = c * r.powi(k) * (-0.5 * x).exp();
    let l = laguerre(n, k as f64, x);
    let dl = if n == 0 { 0.0 } else { -laguerre(n - 1, k as f64 + 1.0, x) };
    let log_slope = if k == 0 { -0.5 * b * r } else { k as f64 / r - 0.5 * b * r };
    envelope * (l * log_slope + dl * b * r)
}

/// C² radial cutoff: 1 on [0, (1-δ)r₀], quintic shoulder, 0 beyond r₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub r0: f64,
    pub delta: f64,
}

impl Cutoff {
    pub fn new(r0: f64, delta: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(invalid("r0", format!("must be positive, got {r0}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("need 0 < delta < 1, got {delta}")));
        }
        Ok(Self { r0, delta })
    }

    fn inner(&self) -> f64 {
        (1.0 - self.delta) * self.r0
    }

    fn width(&self) -> f64 {
        self.delta * self.r0
    }

    /// (χ, χ', χ'').
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let s = (r - self.inner()) / self.width();
        if s <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let w = self.width();
        let g = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        let dg = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        let ddg = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (1.0 - g, -dg / w, -ddg / (w * w))
    }

    fn check_resolution(&self, grid: &RadialGrid) -> Result<()> {
        let cells = self.width() / grid.dr();
        if cells < SHOULDER_CELLS {
            return Err(invalid(
                "grid_n",
                format!("cutoff shoulder spans {cells:.1} cells, need {SHOULDER_CELLS}"),
            ));
        }
        Ok(())
    }
}

/// u_{n,m} = χ ψ_{n,m} sampled on a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quasimode {
    pub n: usize,
    pub m: i64,
    pub b: f64,
    pub cutoff: Cutoff,
    pub grid: RadialGrid,
    /// χ(r_j) ψ_{n,m}(r_j), radial part.
    pub values: Vec<f64>,
    /// Plane L² norm.
    pub norm: f64,
}

impl Quasimode {
    /// 1 - ‖u‖.
    pub fn norm_defect(&self) -> f64 {
        1.0 - self.norm
    }
}

/// Plane norm (2π Σ f_j² r_j Δr)^{1/2} of a radial function.
fn plane_norm(grid: &RadialGrid, values: &[f64]) -> f64 {
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    (2.0 * PI * grid.integrate_r(&squares)).sqrt()
}

pub fn build_quasimode(n: usize, m: i64, b: f64, cutoff: Cutoff, grid: &RadialGrid) -> Result<Quasimode> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(MagresError::NotPositive { quantity: "b", value: b });
    }
    cutoff.check_resolution(grid)?;
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| cutoff.eval(r).0 * landau_radial(n, m, b, r))
        .collect();
    let norm = plane_norm(grid, &values);
    Ok(Quasimode {
        n,
        m,
        b,
        cutoff,
        grid: *grid,
        values,
        norm,
    })
}

/// (‖(H - Λ_n)u‖, ‖u‖) from the commutator
/// (H - Λ)(χψ) = -(χ'' + χ'/r)ψ - 2χ'ψ'. The term A·∇χ vanishes since A is
/// tangential and χ radial.
pub fn quasimode_residual(q: &Quasimode, profile: &FieldProfile) -> Result<(f64, f64)> {
    match profile.constant_value_on(0.0, q.cutoff.r0) {
        Some(c) if c == 1.0 => {}
        Some(c) => {
            return Err(MagresError::ModelMismatch(format!(
                "quasimode expects unit field on [0, {}), profile has {c}",
                q.cutoff.r0
            )))
        }
        None => {
            return Err(MagresError::ModelMismatch(format!(
                "field is not constant on [0, {})",
                q.cutoff.r0
            )))
        }
    }
    let residual: Vec<f64> = q
        .grid
        .nodes()
        .iter()
        .map(|&r| {
            let (_, d1, d2) = q.cutoff.eval(r);
            if d1 == 0.0 && d2 == 0.0 {
                return 0.0;
            }
            let psi = landau_radial(q.n, q.m, q.b, r);
            let dpsi = landau_radial_derivative(q.n, q.m, q.b, r);
            -(d2 + d1 / r) * psi - 2.0 * d1 * dpsi
        })
        .collect();
    Ok((plane_norm(&q.grid, &residual), q.norm))
}

/// Auxiliary model that produced an eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AuxiliaryModel {
    Anharmonic { gamma: f64 },
    Well { b0: f64 },
    Island { rho1: f64 },
}

impl AuxiliaryModel {
    fn field(&self) -> Result<FieldProfile> {
        match *self {
            AuxiliaryModel::Anharmonic { gamma } => FieldProfile::anharmonic(gamma),
            AuxiliaryModel::Well { b0 } => FieldProfile::radial_well(b0),
            AuxiliaryModel::Island { rho1 } => FieldProfile::island(rho1, f64::INFINITY),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AuxiliaryModel::Anharmonic { .. } => "anharmonic",
            AuxiliaryModel::Well { .. } => "well",
            AuxiliaryModel::Island { .. } => "island",
        }
    }
}

/// ‖(H - λ)(χψ)‖ for the `index`-th eigenvector of `result`, with H the
/// fiber of `profile` on the same grid and scale and λ the discrete
/// Rayleigh quotient of ψ. Norms are plane norms of ψ e^{imφ}/√(2π).
pub fn generic_quasimode_residual(
    result: &EigenResult,
    index: usize,
    cutoff: Cutoff,
    profile: &FieldProfile,
    model: AuxiliaryModel,
) -> Result<f64> {
    let grid = &result.grid;
    cutoff.check_resolution(grid)?;
    if cutoff.r0 > grid.r_max() - grid.dr() {
        return Err(invalid("r0", "cutoff must end inside the grid"));
    }
    let reference = model.field()?;
    for i in 0..=200 {
        let r = cutoff.r0 * i as f64 / 200.0;
        let (x, y) = (profile.field(r), reference.field(r));
        if (x - y).abs() > 1e-12 * (1.0 + y.abs()) {
            return Err(MagresError::ModelMismatch(format!(
                "{} field {y} differs from profile field {x} at r = {r}",
                model.name()
            )));
        }
    }
    let op = assemble_fiber(profile, result.m, result.scale, grid, result.boundary)?;
    let dr = grid.dr();
    let to_symmetric = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, x)| x * (grid.node(j) * dr).sqrt())
            .collect()
    };
    let psi = to_symmetric(&result.vectors[index]);
    let h_psi = op.matrix.apply(&psi);
    let lambda = psi.iter().zip(&h_psi).map(|(a, b)| a * b).sum::<f64>()
        / psi.iter().map(|a| a * a).sum::<f64>();
    let u: Vec<f64> = psi
        .iter()
        .enumerate()
        .map(|(j, x)| cutoff.eval(grid.node(j)).0 * x)
        .collect();
    let hu = op.matrix.apply(&u);
    Ok(hu
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Tang–Zworski rectangle [E - w, E + w] + i[-depth, 0] for
/// S(h) = e^{-c r₀²/h}, w = h⁻² √S, depth = h⁻³ S, and residual budget
/// R(h) = e^{-α r₀²/h} with α > c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TzWindow {
    pub center: f64,
    pub h: f64,
    pub c: f64,
    pub r0: f64,
    pub alpha: f64,
    pub s: f64,
    pub r: f64,
    pub half_width: f64,
    pub depth: f64,
    /// Largest h below which w(h) < 1 (None if w < 1 for every h).
    pub crossover: Option<f64>,
}

pub fn tz_window(center: f64, h: f64, c: f64, r0: f64) -> Result<TzWindow> {
    tz_window_with_budget(center, h, c, r0, 2.0 * c)
}

pub fn tz_window_with_budget(center: f64, h: f64, c: f64, r0: f64, alpha: f64) -> Result<TzWindow> {
    for (name, v) in [("h", h), ("c", c), ("r0", r0)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MagresError::NotPositive { quantity: name, value: v });
        }
    }
    if !(alpha > c) {
        return Err(invalid("alpha", format!("residual rate {alpha} must exceed c = {c}")));
    }
    let k = c * r0 * r0;
    let s = (-k / h).exp();
    Ok(TzWindow {
        center,
        h,
        c,
        r0,
        alpha,
        s,
        r: (-alpha * r0 * r0 / h).exp(),
        half_width: (-k / (2.0 * h)).exp() / (h * h),
        depth: s / (h * h * h),
        crossover: tz_crossover(c, r0),
    })
}

/// Smaller root h* of c r₀²/(2h) + 2 ln h = 0, i.e. w(h*) = 1.
pub fn tz_crossover(c: f64, r0: f64) -> Option<f64> {
    let k = c * r0 * r0;
    let f = |h: f64| k / (2.0 * h) + 2.0 * h.ln();
    // f decreases on (0, k/4)
    let top = k / 4.0;
    if f(top) >= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (top * 1e-12, top);
    while f(lo) <= 0.0 {
        lo *= 1e-3;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
