//! Real-part expansions of the resonances and their comparison with direct
//! spectra.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MagresError, Result};
use crate::field::FieldProfile;
use crate::fit::linear_fit;
use crate::radial::{
    dirichlet_disk_levels, eigs_lowest_extrapolated, island_neumann_levels, well_levels, Boundary,
    RadialGrid, Scale,
};
use crate::scaling::{find_resonances, ScalingSetup, Window};

/// Model-specific data of an expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelData {
    /// E_n = (2n + 1)h.
    Landau,
    /// E_n^γ = Λ_n^γ h^{1 + γ/(2+γ)}.
    Anharmonic { gamma: f64, lambdas: Vec<f64> },
    /// λ_n = β h - k₀ C₁ h^{3/2} + (2n + 1)√|k₂| C₂ h^{7/4}.
    Step { beta: f64, c1: f64, c2: f64, k0: f64, k2: f64 },
    /// e_n = b₀h + (2n √det H / b₀ + (Tr H^{1/2})² / b₀) h².
    Well { b0: f64, det_h: f64, tr_sqrt_h: f64 },
    /// ℓ_n h².
    Island { ells: Vec<f64> },
}

impl ModelData {
    pub fn name(&self) -> &'static str {
        match self {
            ModelData::Landau => "landau",
            ModelData::Anharmonic { .. } => "anharmonic",
            ModelData::Step { .. } => "step",
            ModelData::Well { .. } => "well",
            ModelData::Island { .. } => "island",
        }
    }

    /// Exponent of the leading term in h.
    pub fn leading_exponent(&self) -> f64 {
        match self {
            ModelData::Anharmonic { gamma, .. } => anharmonic_exponent(*gamma),
            ModelData::Island { .. } => 2.0,
            _ => 1.0,
        }
    }

    /// Order of the remainder the expansion claims, if any.
    pub fn remainder_order(&self) -> Option<f64> {
        match self {
            ModelData::Step { .. } => Some(2.0),
            ModelData::Well { .. } => Some(3.0),
            _ => None,
        }
    }
}

/// 1 + γ/(2 + γ).
pub fn anharmonic_exponent(gamma: f64) -> f64 {
    1.0 + gamma / (2.0 + gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub n: usize,
    pub h: f64,
    pub data: ModelData,
}

impl ExpansionParams {
    pub fn new(n: usize, h: f64, data: ModelData) -> Self {
        Self { n, h, data }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(MagresError::NotPositive { quantity: "h", value: self.h });
        }
        match &self.data {
            ModelData::Landau => {}
            ModelData::Anharmonic { gamma, lambdas } => {
                if !(*gamma >= 0.0) {
                    return Err(invalid("gamma", format!("must be >= 0, got {gamma}")));
                }
                if lambdas.len() <= self.n {
                    return Err(invalid("lambdas", format!("no anharmonic level for n = {}", self.n)));
                }
            }
            ModelData::Step { k2, .. } => {
                if !(*k2 < 0.0) {
                    return Err(invalid("k2", format!("curvature second derivative must be negative, got {k2}")));
                }
            }
            ModelData::Well { b0, det_h, .. } => {
                if !(*b0 > 0.0) {
                    return Err(MagresError::NotPositive { quantity: "b0", value: *b0 });
                }
                if !(*det_h > 0.0) {
                    return Err(MagresError::NotPositive { quantity: "det H", value: *det_h });
                }
            }
            ModelData::Island { ells } => {
                if ells.len() <= self.n {
                    return Err(invalid("ells", format!("no Dirichlet level for n = {}", self.n)));
                }
            }
        }
        Ok(())
    }
}

/// Leading real-part expansion for the chosen model.
pub fn expansion_real_part(p: &ExpansionParams) -> Result<f64> {
    p.validate()?;
    let h = p.h;
    let n = p.n as f64;
    Ok(match &p.data {
        ModelData::Landau => (2.0 * n + 1.0) * h,
        ModelData::Anharmonic { gamma, lambdas } => lambdas[p.n] * h.powf(anharmonic_exponent(*gamma)),
        ModelData::Step { beta, c1, c2, k0, k2 } => {
            beta * h - k0 * c1 * h.powf(1.5) + (2.0 * n + 1.0) * k2.abs().sqrt() * c2 * h.powf(1.75)
        }
        ModelData::Well { b0, det_h, tr_sqrt_h } => {
            b0 * h + (2.0 * n * det_h.sqrt() / b0 + tr_sqrt_h * tr_sqrt_h / b0) * h * h
        }
        ModelData::Island { ells } => ells[p.n] * h * h,
    })
}

/// Well data for B = b₀ + r²: H = ½ Hess B = I, det H = 1, Tr H^{1/2} = 2.
pub fn radial_well_data(b0: f64) -> ModelData {
    ModelData::Well {
        b0,
        det_h: 1.0,
        tr_sqrt_h: 2.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub n: usize,
    pub h: f64,
    pub expansion: f64,
    pub direct: f64,
    pub difference: f64,
    /// |diff| at the previous (larger) h over |diff| here.
    pub ratio: f64,
    pub expected_order: Option<f64>,
    pub observed_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn rows_for(&self, model: &str, n: usize) -> Vec<&ComparisonRow> {
        self.rows.iter().filter(|r| r.model == model && r.n == n).collect()
    }
}

/// Compare direct values with expansions, grouped by (model, n). Each group
/// needs at least three distinct h; the observed order is the slope of
/// log|diff| against log h.
pub fn compare(samples: &[(ExpansionParams, f64)]) -> Result<ComparisonReport> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for (p, _) in samples {
        let key = (p.data.name().to_string(), p.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows = Vec::new();
    for (model, n) in keys {
        let mut group: Vec<&(ExpansionParams, f64)> = samples
            .iter()
            .filter(|(p, _)| p.data.name() == model && p.n == n)
            .collect();
        group.sort_by(|a, b| b.0.h.total_cmp(&a.0.h));
        group.dedup_by(|a, b| a.0.h == b.0.h);
        if group.len() < 3 {
            return Err(MagresError::InsufficientSamples {
                needed: 3,
                got: group.len(),
            });
        }
        let mut partial = Vec::with_capacity(group.len());
        for (p, direct) in &group {
            let expansion = expansion_real_part(p)?;
            partial.push((p.h, expansion, *direct, direct - expansion, p.data.remainder_order()));
        }
        let xs: Vec<f64> = partial.iter().map(|r| r.0.ln()).collect();
        let ys: Vec<f64> = partial.iter().map(|r| r.3.abs().ln()).collect();
        let observed = if ys.iter().all(|y| y.is_finite()) {
            linear_fit(&xs, &ys)?.slope
        } else {
            f64::NAN
        };
        for (i, &(h, expansion, direct, difference, expected)) in partial.iter().enumerate() {
            let ratio = if i == 0 { f64::NAN } else { partial[i - 1].3.abs() / difference.abs() };
            rows.push(ComparisonRow {
                model: model.clone(),
                n,
                h,
                expansion,
                direct,
                difference,
                ratio,
                expected_order: expected,
                observed_order: observed,
            });
        }
    }
    Ok(ComparisonReport { rows })
}

/// Dirichlet eigenvalues ℓ_n of the island disk, Bessel-checked to 1e-6.
pub fn island_reference(rho1: f64, n_max: usize) -> Result<Vec<f64>> {
    dirichlet_disk_levels(rho1, n_max)
}

/// Default grid for the radial well sweeps.
pub fn well_grid() -> Result<RadialGrid> {
    RadialGrid::new(4.0, 4000)
}

/// (params, ẽ_n(h)) for the radial well over `hs`.
pub fn well_samples(b0: f64, n: usize, hs: &[f64], grid: &RadialGrid) -> Result<Vec<(ExpansionParams, f64)>> {
    hs.par_iter()
        .map(|&h| {
            let levels = well_levels(b0, h, n, None, grid)?;
            Ok((ExpansionParams::new(n, h, radial_well_data(b0)), levels[n]))
        })
        .collect()
}

/// (params, ℓ̂_n(b)/b²) with h = 1/b for the island, against ℓ_n h².
pub fn island_samples(
    rho1: f64,
    rho2: f64,
    n: usize,
    fields: &[f64],
    n_points: usize,
) -> Result<Vec<(ExpansionParams, f64)>> {
    let ells = island_reference(rho1, n)?;
    fields
        .par_iter()
        .map(|&b| {
            let levels = island_neumann_levels(rho1, rho2, b, n, None, n_points)?;
            let h = 1.0 / b;
            Ok((
                ExpansionParams::new(n, h, ModelData::Island { ells: ells.clone() }),
                levels[n] * h * h,
            ))
        })
        .collect()
}

/// (params, lowest eigenvalue of h²(-Δ) + (hm/r - r^{1+γ}/(2+γ))²) in sector
/// `m`, against Λ h^{1+γ/(2+γ)} with Λ the b = 1 value of the same sector.
pub fn anharmonic_samples(gamma: f64, m: i64, hs: &[f64], grid: &RadialGrid) -> Result<Vec<(ExpansionParams, f64)>> {
    let profile = FieldProfile::anharmonic(gamma)?;
    let unit = eigs_lowest_extrapolated(&profile, m, Scale::Field(1.0), grid, Boundary::DirichletFar, 1)?.values[0];
    hs.par_iter()
        .map(|&h| {
            let value =
                eigs_lowest_extrapolated(&profile, m, Scale::Semiclassical(h), grid, Boundary::DirichletFar, 1)?.values[0];
            Ok((
                ExpansionParams::new(
                    0,
                    h,
                    ModelData::Anharmonic {
                        gamma,
                        lambdas: vec![unit],
                    },
                ),
                value,
            ))
        })
        .collect()
}

/// (params, Re z₀(h)) for the lowest resonance of the unit constant disk.
pub fn landau_resonance_samples(r0: f64, hs: &[f64], setup: &ScalingSetup) -> Result<Vec<(ExpansionParams, f64)>> {
    let profile = FieldProfile::constant_disk(r0)?;
    hs.iter()
        .map(|&h| {
            let set = find_resonances(&profile, h, (0, 0), &Window::landau(h), setup)?;
            let z = set
                .resonances
                .first()
                .ok_or_else(|| MagresError::NoMinimum { lo: 0.6 * h, hi: 1.4 * h })?;
            Ok((ExpansionParams::new(0, h, ModelData::Landau), z.z.re))
        })
        .collect()
}
