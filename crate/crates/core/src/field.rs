//! Radial magnetic fields, their canonical angular potential and flux.
//!
//! A field is stored as a finite sum of power-law pieces `c·r^p` on annuli
//! `[start, end)`, so `a(r) = (1/r)∫₀^r s B(s) ds` has a closed form on every
//! piece and no quadrature happens at run time.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MagresError, Result};

/// Preset family of a field configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// B = 1 on the disk of radius `r0`.
    ConstantDisk,
    /// B = r^gamma.
    Anharmonic,
    /// B = b0 + r².
    WellRadial,
    /// B = 0 on the island `r < rho1`, B = 1 outside it.
    IslandAnnular,
}

impl FieldKind {
    fn parameters(self) -> &'static [&'static str] {
        match self {
            FieldKind::ConstantDisk => &["r0"],
            FieldKind::Anharmonic => &["gamma"],
            FieldKind::WellRadial => &["b0"],
            FieldKind::IslandAnnular => &["rho1", "rho2"],
        }
    }
}

/// Field preset as read from a configuration file.
///
/// `R0` is the outer support radius. It may be omitted for the full-plane
/// families (`anharmonic`, `well_radial`); when given for them the field is
/// cut off sharply at `R0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "R0", default, skip_serializing_if = "Option::is_none")]
    pub r0_support: Option<f64>,
}

impl FieldSpec {
    pub fn new(kind: FieldKind, params: &[(&str, f64)], support: Option<f64>) -> Self {
        Self {
            kind,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            r0_support: support,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FieldSpec =
            serde_json::from_str(text).map_err(|e| MagresError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MagresError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| MagresError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field spec serializes")
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| MagresError::Config(format!("{:?} needs parameter `{name}`", self.kind)))
    }

    /// Check key names, signs and radius ordering.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.parameters();
        for (key, value) in &self.params {
            if !allowed.contains(&key.as_str()) {
                return Err(MagresError::Config(format!(
                    "unknown parameter `{key}` for {:?} (expected {allowed:?})",
                    self.kind
                )));
            }
            if !value.is_finite() {
                return Err(MagresError::Config(format!("parameter `{key}` must be finite")));
            }
        }
        for key in allowed {
            self.param(key)?;
        }
        let support = match self.r0_support {
            Some(r) if !(r.is_finite() && r > 0.0) => {
                return Err(MagresError::Config(format!("R0 must be a positive length, got {r}")))
            }
            Some(r) => Some(r),
            None => None,
        };
        let positive = |name: &str| -> Result<f64> {
            let v = self.param(name)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(MagresError::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        match self.kind {
            FieldKind::ConstantDisk => {
                let r0 = positive("r0")?;
                let big_r = support.ok_or_else(|| MagresError::Config("constant_disk needs R0".into()))?;
                if r0 > big_r {
                    return Err(MagresError::Config(format!("r0 = {r0} exceeds R0 = {big_r}")));
                }
            }
            FieldKind::Anharmonic => {
                let gamma = self.param("gamma")?;
                if gamma < 0.0 {
                    return Err(MagresError::Config(format!("gamma must be >= 0, got {gamma}")));
                }
            }
            FieldKind::WellRadial => {
                positive("b0")?;
            }
            FieldKind::IslandAnnular => {
                let rho1 = positive("rho1")?;
                let rho2 = positive("rho2")?;
                let big_r = support.ok_or_else(|| MagresError::Config("island_annular needs R0".into()))?;
                if !(rho1 < rho2 && rho2 <= big_r) {
                    return Err(MagresError::Config(format!(
                        "need rho1 < rho2 <= R0, got {rho1}, {rho2}, {big_r}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One piece `coeff·r^power` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPiece {
    pub coeff: f64,
    pub power: f64,
    pub start: f64,
    pub end: f64,
}

impl PowerPiece {
    fn field(&self, r: f64) -> f64 {
        if r >= self.start && r < self.end {
            self.coeff * r.powf(self.power)
        } else {
            0.0
        }
    }

    /// ∫₀^r s·B(s) ds restricted to this piece.
    fn moment(&self, r: f64) -> f64 {
        if r <= self.start {
            return 0.0;
        }
        let top = r.min(self.end);
        let q = self.power + 2.0;
        self.coeff * (top.powf(q) - self.start.powf(q)) / q
    }
}

/// Immutable radial field with closed-form potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pieces: Vec<PowerPiece>,
    support: f64,
}

impl FieldProfile {
    pub fn from_pieces(pieces: Vec<PowerPiece>, support: f64) -> Result<Self> {
        if !(support > 0.0) {
            return Err(invalid("support", format!("support radius must be positive, got {support}")));
        }
        for p in &pieces {
            if !(p.start >= 0.0 && p.start < p.end && p.coeff.is_finite() && p.power.is_finite()) {
                return Err(invalid("pieces", format!("malformed piece {p:?}")));
            }
            if p.power <= -2.0 {
                return Err(invalid("pieces", "power must exceed -2 for a finite flux"));
            }
        }
        let pieces = pieces
            .into_iter()
            .filter(|p| p.start < support && p.coeff != 0.0)
            .map(|p| PowerPiece {
                end: p.end.min(support),
                ..p
            })
            .collect();
        Ok(Self { pieces, support })
    }

    /// B ≡ 0.
    pub fn zero() -> Self {
        Self {
            pieces: Vec::new(),
            support: f64::INFINITY,
        }
    }

    /// Constant field `b` on the whole plane.
    pub fn constant(b: f64) -> Self {
        Self::power_law(b, 0.0)
    }

    /// Full-plane field `c·r^p`.
    pub fn power_law(c: f64, p: f64) -> Self {
        Self {
            pieces: vec![PowerPiece {
                coeff: c,
                power: p,
                start: 0.0,
                end: f64::INFINITY,
            }],
            support: f64::INFINITY,
        }
    }

    /// Constant unit field on the disk of radius `r0`.
    pub fn constant_disk(r0: f64) -> Result<Self> {
        Self::from_pieces(
            vec![PowerPiece {
                coeff: 1.0,
                power: 0.0,
                start: 0.0,
                end: r0,
            }],
            r0,
        )
    }

    /// Full-plane anharmonic field `r^gamma`.
    pub fn anharmonic(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be >= 0, got {gamma}")));
        }
        Ok(Self::power_law(1.0, gamma))
    }

    /// Full-plane radial well `b0 + r²`.
    pub fn radial_well(b0: f64) -> Result<Self> {
        if !(b0 > 0.0) {
            return Err(invalid("b0", format!("must be positive, got {b0}")));
        }
        Ok(Self::constant(b0).superpose(&Self::power_law(1.0, 2.0)))
    }

    /// Unit field on `[rho1, support)`, zero on the island `r < rho1`.
    pub fn island(rho1: f64, support: f64) -> Result<Self> {
        if !(rho1 > 0.0 && rho1 < support) {
            return Err(invalid("rho1", format!("need 0 < rho1 < support, got {rho1}, {support}")));
        }
        Self::from_pieces(
            vec![PowerPiece {
                coeff: 1.0,
                power: 0.0,
                start: rho1,
                end: f64::INFINITY,
            }],
            support,
        )
    }

    /// Build the profile described by a configuration.
    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        spec.validate()?;
        let support = spec.r0_support.unwrap_or(f64::INFINITY);
        let profile = match spec.kind {
            FieldKind::ConstantDisk => Self::from_pieces(
                vec![PowerPiece {
                    coeff: 1.0,
                    power: 0.0,
                    start: 0.0,
                    end: spec.param("r0")?,
                }],
                support,
            )?,
            FieldKind::Anharmonic => Self::anharmonic(spec.param("gamma")?)?.restrict(support)?,
            FieldKind::WellRadial => Self::radial_well(spec.param("b0")?)?.restrict(support)?,
            FieldKind::IslandAnnular => Self::island(spec.param("rho1")?, support)?,
        };
        Ok(profile)
    }

    /// Sum of two fields; the support is the larger of the two.
    pub fn superpose(&self, other: &Self) -> Self {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().copied());
        Self {
            pieces,
            support: self.support.max(other.support),
        }
    }

    /// The field cut off at `radius`.
    pub fn restrict(&self, radius: f64) -> Result<Self> {
        Self::from_pieces(self.pieces.clone(), radius.min(self.support))
    }

    pub fn pieces(&self) -> &[PowerPiece] {
        &self.pieces
    }

    /// Outer support radius R0 (infinite for full-plane fields).
    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn is_compact(&self) -> bool {
        self.support.is_finite()
    }

    pub fn field(&self, r: f64) -> f64 {
        self.pieces.iter().map(|p| p.field(r)).sum()
    }

    /// ∫₀^r s·B(s) ds.
    pub fn moment(&self, r: f64) -> f64 {
        self.pieces.iter().map(|p| p.moment(r)).sum()
    }

    /// a(r) = (1/r)∫₀^r s B(s) ds for r > 0, with a(0) = 0.
    pub fn potential(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.moment(r) / r
        }
    }

    /// Checked evaluation of the angular potential.
    pub fn angular_potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(invalid("r", format!("angular potential needs r > 0, got {r}")));
        }
        Ok(self.potential(r))
    }

    /// Total flux α = (1/2π)∫B dx = ∫₀^∞ s B(s) ds; infinite for
    /// non-vanishing full-plane fields.
    pub fn flux(&self) -> f64 {
        if self.pieces.iter().any(|p| p.end.is_infinite()) {
            return f64::INFINITY;
        }
        self.moment(self.support)
    }

    /// `Some(c)` if B ≡ c on `[lo, hi)`.
    pub fn constant_value_on(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut value = 0.0;
        for p in &self.pieces {
            if p.end <= lo || p.start >= hi {
                continue;
            }
            if p.start > lo || p.end < hi || p.power != 0.0 {
                return None;
            }
            value += p.coeff;
        }
        Some(value)
    }
}
