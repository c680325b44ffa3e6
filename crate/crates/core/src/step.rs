//! Band functions of the flat magnetic step.
//!
//! For the step field b_a(τ) = 1 (τ > 0), a (τ < 0) the fiber operator is
//! h_a[ξ] = -d²/dτ² + (ξ + b_a(τ)τ)². It is discretized on [-L, L] with
//! Dirichlet ends and τ = 0 on a grid node.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MagresError, Result};
use crate::linalg::SymTridiagonal;

pub const DEFAULT_HALF_LENGTH: f64 = 12.0;
pub const DEFAULT_POINTS: usize = 4800;
pub const DEFAULT_BRACKET: (f64, f64) = (-4.0, 1.0);
pub const SCAN_STEP: f64 = 0.05;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-8;
pub const SECOND_DIFFERENCE_STEPS: (f64, f64) = (1e-2, 5e-3);
/// Required clearance of the end potential over the computed μ.
pub const END_MARGIN: f64 = 10.0;
const FLAT_SPREAD: f64 = 1e-6;

/// Which step ratios are admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// a ∈ (-1, 0), the sign-changing steps.
    Theorem,
    /// Additionally a = -1 and a ∈ (0, 1], for regression anchors.
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub a: f64,
    /// Half-length of the truncated line.
    pub half_length: f64,
    /// Number of grid intervals on [-L, L] (even, so that τ = 0 is a node).
    pub intervals: usize,
    pub mode: StepMode,
}

impl StepParams {
    pub fn new(a: f64, half_length: f64, intervals: usize, mode: StepMode) -> Result<Self> {
        let admitted = match mode {
            StepMode::Theorem => a > -1.0 && a < 0.0,
            StepMode::Validation => (-1.0..0.0).contains(&a) || (a > 0.0 && a <= 1.0),
        };
        if !admitted {
            return Err(invalid(
                "a",
                format!("step ratio {a} not admitted in {mode:?} mode"),
            ));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid("half_length", format!("must be positive, got {half_length}")));
        }
        if intervals < 64 || intervals % 2 != 0 {
            return Err(invalid(
                "intervals",
                format!("need an even count >= 64, got {intervals}"),
            ));
        }
        Ok(Self {
            a,
            half_length,
            intervals,
            mode,
        })
    }

    /// L = 12, N = 4800.
    pub fn with_defaults(a: f64, mode: StepMode) -> Result<Self> {
        Self::new(a, DEFAULT_HALF_LENGTH, DEFAULT_POINTS, mode)
    }

    /// Defaults, with L enlarged (at fixed spacing) until the end potential
    /// clears μ + 10 for every ξ in `bracket`, assuming μ ≤ `mu_bound`.
    pub fn for_bracket(a: f64, mode: StepMode, bracket: (f64, f64), mu_bound: f64) -> Result<Self> {
        let base = Self::with_defaults(a, mode)?;
        let needed = required_half_length(a, bracket, mu_bound);
        if needed <= base.half_length {
            return Ok(base);
        }
        let spacing = base.spacing();
        let half_length = needed.ceil();
        let intervals = 2 * (half_length / spacing).round() as usize;
        Self::new(a, half_length, intervals, mode)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.intervals as f64
    }

    /// Same domain, `factor` times the intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.a, self.half_length, self.intervals * factor, self.mode)
    }

    /// Domain enlarged by `extra` at the same spacing.
    pub fn enlarged(&self, extra: f64) -> Result<Self> {
        let half_length = self.half_length + extra;
        let intervals = 2 * (half_length / self.spacing()).round() as usize;
        Self::new(self.a, half_length, intervals, self.mode)
    }

    /// Interior nodes τ_i, i = 1..intervals-1.
    pub fn nodes(&self) -> Vec<f64> {
        let dt = self.spacing();
        (1..self.intervals)
            .map(|i| -self.half_length + i as f64 * dt)
            .collect()
    }

    /// Index of τ = 0 among the interior nodes.
    pub fn origin_index(&self) -> usize {
        self.intervals / 2 - 1
    }

    fn field(&self, tau: f64) -> f64 {
        if tau > 0.0 {
            1.0
        } else {
            self.a
        }
    }

    fn end_potentials(&self, xi: f64) -> (f64, f64) {
        let l = self.half_length;
        ((xi - self.a * l).powi(2), (xi + l).powi(2))
    }

    fn matrix(&self, xi: f64) -> Result<SymTridiagonal> {
        let dt = self.spacing();
        let diag = self
            .nodes()
            .iter()
            .map(|&t| 2.0 / (dt * dt) + (xi + self.field(t) * t).powi(2))
            .collect::<Vec<_>>();
        let off = vec![-1.0 / (dt * dt); diag.len() - 1];
        SymTridiagonal::new(diag, off)
    }
}

/// Smallest L for which both ends clear `mu_bound + 10` over `bracket`.
pub fn required_half_length(a: f64, bracket: (f64, f64), mu_bound: f64) -> f64 {
    let clearance = (mu_bound + END_MARGIN).sqrt();
    let (lo, hi) = bracket;
    // right end: ξ + L ≥ clearance for the most negative ξ
    let mut l = clearance - lo;
    // left end: |ξ - aL| ≥ clearance
    if a < 0.0 {
        l = l.max((clearance - lo) / -a);
    } else if a > 0.0 {
        l = l.max((clearance + hi) / a);
    }
    l
}

/// μ_a(ξ) with its ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub xi: f64,
    pub mu: f64,
    /// Ground state on the interior nodes, Σ φ² Δτ = 1, φ(0) > 0.
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
    pub phi0: f64,
    /// Centered difference at τ = 0.
    pub phi0_prime: f64,
    /// Hellmann–Feynman derivative dμ/dξ = ∫ φ² · 2(ξ + b_a τ) dτ.
    pub slope: f64,
}

/// Lowest eigenpair of h_a[ξ] on [-L, L].
pub fn band_value(params: &StepParams, xi: f64) -> Result<BandSample> {
    let matrix = params.matrix(xi)?;
    let (values, vectors) = matrix.lowest_eigenpairs(1)?;
    let mu = values[0];
    let (left, right) = params.end_potentials(xi);
    let end = left.min(right);
    if end < mu + END_MARGIN {
        return Err(MagresError::TruncationUnsafe {
            position: if left < right { -params.half_length } else { params.half_length },
            boundary_potential: end,
            window: mu,
            margin: END_MARGIN,
        });
    }
    let dt = params.spacing();
    let i0 = params.origin_index();
    let mut phi: Vec<f64> = vectors[0].iter().map(|v| v / dt.sqrt()).collect();
    if phi[i0] < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    let nodes = params.nodes();
    let slope = phi
        .iter()
        .zip(&nodes)
        .map(|(p, &t)| p * p * 2.0 * (xi + params.field(t) * t))
        .sum::<f64>()
        * dt;
    Ok(BandSample {
        xi,
        mu,
        phi0: phi[i0],
        phi0_prime: (phi[i0 + 1] - phi[i0 - 1]) / (2.0 * dt),
        slope,
        eigenfunction: phi,
    })
}

/// μ at `params` and at doubled resolution, combined as (4 μ_2N - μ_N) / 3.
pub fn band_value_extrapolated(params: &StepParams, xi: f64) -> Result<f64> {
    let coarse = band_value(params, xi)?.mu;
    let fine = band_value(&params.refined(2)?, xi)?.mu;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// [`band_value`] with the L → L + 2 stability check (|Δμ| ≤ 1e-8).
pub fn band_value_checked(params: &StepParams, xi: f64) -> Result<BandSample> {
    let sample = band_value(params, xi)?;
    let wider = band_value(&params.enlarged(2.0)?, xi)?;
    let change = (wider.mu - sample.mu).abs();
    if change > 1e-8 {
        return Err(MagresError::TruncationUnsafe {
            position: params.half_length,
            boundary_potential: change,
            window: sample.mu,
            margin: 1e-8,
        });
    }
    Ok(sample)
}

/// μ sampled on a uniform ξ grid (parallel, ordered by ξ).
pub fn band_table(params: &StepParams, lo: f64, hi: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && hi > lo) {
        return Err(invalid("step", "need lo < hi and a positive step"));
    }
    let count = ((hi - lo) / step).round() as usize + 1;
    let xs: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    xs.par_iter()
        .map(|&xi| band_value(params, xi).map(|s| (xi, s.mu)))
        .collect()
}

/// Minimizer and minimum of the band function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMinimum {
    pub zeta: f64,
    pub beta: f64,
    pub slope: f64,
}

/// Coarse scan at step 0.05, then golden section and a safeguarded secant
/// iteration on dμ/dξ until |dμ/dξ| < 1e-8.
pub fn minimize_band(params: &StepParams, bracket: (f64, f64)) -> Result<BandMinimum> {
    let (lo, hi) = bracket;
    let table = band_table(params, lo, hi, SCAN_STEP)?;
    let values: Vec<f64> = table.iter().map(|p| p.1).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < FLAT_SPREAD {
        return Err(MagresError::FlatBand { spread: max - min });
    }
    let minima: Vec<usize> = (1..values.len() - 1)
        .filter(|&i| values[i] <= values[i - 1] && values[i] < values[i + 1])
        .collect();
    let index = match minima.as_slice() {
        [] => return Err(MagresError::NoMinimum { lo, hi }),
        [i] => *i,
        many => {
            return Err(MagresError::MultipleMinima {
                candidates: many.iter().map(|&i| table[i].0).collect(),
            })
        }
    };
    let mut a = table[index - 1].0;
    let mut b = table[index + 1].0;

    // golden section down to a bracket of width 1e-3
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mu = |x: f64| band_value(params, x).map(|s| s.mu);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (mu(c)?, mu(d)?);
    while b - a > 1e-3 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = mu(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = mu(d)?;
        }
    }

    // root of the Hellmann–Feynman slope inside [a, b]
    let mut sa = band_value(params, a)?;
    let mut sb = band_value(params, b)?;
    if sa.slope > 0.0 || sb.slope < 0.0 {
        return Err(MagresError::NoMinimum { lo: a, hi: b });
    }
    let mut best = if sa.slope.abs() < sb.slope.abs() { sa.clone() } else { sb.clone() };
    for _ in 0..100 {
        if best.slope.abs() < DERIVATIVE_TOLERANCE {
            break;
        }
        let mut x = sa.xi - sa.slope * (sb.xi - sa.xi) / (sb.slope - sa.slope);
        let width = sb.xi - sa.xi;
        if !(x > sa.xi + 0.01 * width && x < sb.xi - 0.01 * width) {
            x = 0.5 * (sa.xi + sb.xi);
        }
        let s = band_value(params, x)?;
        if s.slope.abs() < best.slope.abs() {
            best = s.clone();
        }
        if s.slope < 0.0 {
            sa = s;
        } else {
            sb = s;
        }
        if sb.xi - sa.xi < 1e-14 {
            break;
        }
    }
    if best.slope.abs() >= DERIVATIVE_TOLERANCE {
        return Err(MagresError::NoConvergence {
            iterations: 100,
            residual: best.slope.abs(),
        });
    }
    Ok(BandMinimum {
        zeta: best.xi,
        beta: best.mu,
        slope: best.slope,
    })
}

/// μ''(ζ) from central second differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivative {
    /// Richardson combination (4 D(s/2) - D(s)) / 3.
    pub value: f64,
    /// D(s) and D(s/2).
    pub raw: (f64, f64),
}

pub fn band_second_derivative(params: &StepParams, zeta: f64) -> Result<SecondDerivative> {
    let center = band_value(params, zeta)?.mu;
    let diff = |s: f64| -> Result<f64> {
        let plus = band_value(params, zeta + s)?.mu;
        let minus = band_value(params, zeta - s)?.mu;
        Ok((plus - 2.0 * center + minus) / (s * s))
    };
    let (s1, s2) = SECOND_DIFFERENCE_STEPS;
    let raw = (diff(s1)?, diff(s2)?);
    let value = (4.0 * raw.1 - raw.0) / 3.0;
    if !(value > FLAT_SPREAD) {
        return Err(MagresError::NotPositive {
            quantity: "band second derivative",
            value,
        });
    }
    Ok(SecondDerivative { value, raw })
}

/// (β_a, ζ_a, μ''_a(ζ_a), φ_a(0), φ_a'(0), C₁(a), C₂(a)) for one step ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    pub a: f64,
    pub beta: f64,
    pub zeta: f64,
    pub mu2: f64,
    pub phi0: f64,
    pub phi0p: f64,
    pub c1: f64,
    pub c2: f64,
    pub half_length: f64,
    pub intervals: usize,
}

/// C₁ = ⅓(1 - 1/a) ζ φ(0) φ'(0).
pub fn c1_formula(a: f64, zeta: f64, phi0: f64, phi0p: f64) -> f64 {
    (1.0 - 1.0 / a) * zeta * phi0 * phi0p / 3.0
}

/// C₂ = ½ √(μ'' C₁).
pub fn c2_formula(mu2: f64, c1: f64) -> f64 {
    0.5 * (mu2 * c1).sqrt()
}

pub fn spectral_constants(params: &StepParams) -> Result<SpectralConstants> {
    if !(params.a > -1.0 && params.a < 0.0) {
        return Err(invalid("a", format!("spectral constants need a in (-1, 0), got {}", params.a)));
    }
    let minimum = minimize_band(params, DEFAULT_BRACKET)?;
    let mu2 = band_second_derivative(params, minimum.zeta)?.value;
    let sample = band_value(params, minimum.zeta)?;
    let c1 = c1_formula(params.a, minimum.zeta, sample.phi0, sample.phi0_prime);
    if !(c1 > 0.0) {
        return Err(MagresError::NotPositive { quantity: "C1", value: c1 });
    }
    Ok(SpectralConstants {
        a: params.a,
        beta: minimum.beta,
        zeta: minimum.zeta,
        mu2,
        phi0: sample.phi0,
        phi0p: sample.phi0_prime,
        c1,
        c2: c2_formula(mu2, c1),
        half_length: params.half_length,
        intervals: params.intervals,
    })
}

/// Theorem-mode constants with the domain sized for the default bracket.
pub fn spectral_constants_for(a: f64, resolution: usize) -> Result<SpectralConstants> {
    let params = StepParams::for_bracket(a, StepMode::Theorem, DEFAULT_BRACKET, 1.0)?.refined(resolution)?;
    spectral_constants(&params)
}
