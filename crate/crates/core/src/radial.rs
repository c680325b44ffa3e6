//! Self-adjoint radial fibers of rotationally symmetric magnetic Laplacians.
//!
//! In the sector e^{imφ} the operator with field scale `b` reads
//!
//! ```text
//! -u'' - u'/r + (m/r - b a(r))² u
//! ```
//!
//! and the semiclassical form with parameter `h` is `h²(-u'' - u'/r) + (hm/r - a(r))² u`.
//! Both are discretized in conservative form on the staggered grid
//! r_j = (j + ½)Δr and symmetrized with v = √r·u, which gives a real
//! symmetric tridiagonal matrix and never touches the r = 0 singularity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j_zeros;
use crate::error::{invalid, MagresError, Result};
use crate::field::FieldProfile;
use crate::linalg::SymTridiagonal;

/// Distance from the truncation radius to the spectral window that the
/// potential must keep.
pub const TRUNCATION_MARGIN: f64 = 10.0;

/// Values within this relative distance count as a single level.
pub const DEDUP_TOLERANCE: f64 = 1e-8;

/// Staggered radial grid r_j = (j + ½)·r_max/N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub const MIN_POINTS: usize = 64;

    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(invalid("r_max", format!("must be positive, got {r_max}")));
        }
        if n < Self::MIN_POINTS {
            return Err(invalid(
                "grid_n",
                format!("need at least {} points, got {n}", Self::MIN_POINTS),
            ));
        }
        Ok(Self { r_max, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dr()
    }

    /// Cell face between nodes `j - 1` and `j` (face 0 is the origin).
    pub fn face(&self, j: usize) -> f64 {
        j as f64 * self.dr()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Same radius, half the points (for Richardson extrapolation).
    pub fn coarsened(&self) -> Result<Self> {
        if self.n % 2 != 0 {
            return Err(invalid("grid_n", "Richardson extrapolation needs an even point count"));
        }
        Self::new(self.r_max, self.n / 2)
    }

    /// Same spacing on a doubled radius.
    pub fn extended(&self) -> Self {
        Self {
            r_max: 2.0 * self.r_max,
            n: 2 * self.n,
        }
    }

    /// Midpoint quadrature of samples on the nodes against r dr.
    pub fn integrate_r(&self, values: &[f64]) -> f64 {
        let dr = self.dr();
        values
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.node(j) * dr)
            .sum()
    }
}

/// Field-strength or semiclassical normalization of a fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Scale {
    /// `-Δ + (m/r - b a)²`.
    Field(f64),
    /// `h²(-Δ) + (hm/r - a)²`.
    Semiclassical(f64),
}

impl Scale {
    fn validate(self) -> Result<()> {
        let (name, v) = match self {
            Scale::Field(b) => ("b", b),
            Scale::Semiclassical(h) => ("h", h),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(MagresError::NotPositive { quantity: name, value: v })
        }
    }

    /// Coefficient of the Laplacian.
    pub fn kinetic(self) -> f64 {
        match self {
            Scale::Field(_) => 1.0,
            Scale::Semiclassical(h) => h * h,
        }
    }

    /// The `b` or `h` value.
    pub fn value(self) -> f64 {
        match self {
            Scale::Field(b) => b,
            Scale::Semiclassical(h) => h,
        }
    }

    /// `(m/r - b a)²` or `(hm/r - a)²`.
    pub fn potential(self, m: i64, r: f64, a: f64) -> f64 {
        let w = match self {
            Scale::Field(b) => m as f64 / r - b * a,
            Scale::Semiclassical(h) => h * m as f64 / r - a,
        };
        w * w
    }
}

/// Condition at the outer radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletFar,
    NeumannFar,
}

/// Assembled radial fiber in one angular sector.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub m: i64,
    pub scale: Scale,
    pub boundary: Boundary,
    pub grid: RadialGrid,
    /// Potential at the nodes.
    pub potential: Vec<f64>,
    /// Potential at r_max itself.
    pub boundary_potential: f64,
    pub matrix: SymTridiagonal,
}

impl FiberOperator {
    /// Reject the truncation if the potential at r_max does not clear the
    /// spectral window by [`TRUNCATION_MARGIN`]. Neumann boundaries are
    /// physical and are not checked.
    pub fn check_truncation(&self, window: f64) -> Result<()> {
        if self.boundary == Boundary::NeumannFar {
            return Ok(());
        }
        if self.boundary_potential < window + TRUNCATION_MARGIN {
            return Err(MagresError::TruncationUnsafe {
                position: self.grid.r_max(),
                boundary_potential: self.boundary_potential,
                window,
                margin: TRUNCATION_MARGIN,
            });
        }
        Ok(())
    }
}

/// Kinetic part of the symmetrized conservative stencil, scaled by `kappa`.
///
/// Returns (diagonal, off-diagonal). The Dirichlet condition at r_max uses
/// the antisymmetric ghost u_N = -u_{N-1}; Neumann drops the outer flux.
pub(crate) fn kinetic_stencil(grid: &RadialGrid, kappa: f64, boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let dr2 = grid.dr() * grid.dr();
    let mut diag = Vec::with_capacity(n);
    for j in 0..n {
        let r = grid.node(j);
        let inner = grid.face(j);
        let outer = grid.face(j + 1);
        let flux = if j + 1 < n {
            inner + outer
        } else {
            match boundary {
                Boundary::DirichletFar => inner + 2.0 * outer,
                Boundary::NeumannFar => inner,
            }
        };
        diag.push(kappa * flux / (r * dr2));
    }
    let off = (0..n - 1)
        .map(|j| -kappa * grid.face(j + 1) / (dr2 * (grid.node(j) * grid.node(j + 1)).sqrt()))
        .collect();
    (diag, off)
}

/// Assemble the fiber for sector `m`.
pub fn assemble_fiber(
    profile: &FieldProfile,
    m: i64,
    scale: Scale,
    grid: &RadialGrid,
    boundary: Boundary,
) -> Result<FiberOperator> {
    scale.validate()?;
    let (mut diag, off) = kinetic_stencil(grid, scale.kinetic(), boundary);
    let potential: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| scale.potential(m, r, profile.potential(r)))
        .collect();
    diag.iter_mut().zip(&potential).for_each(|(d, v)| *d += v);
    let r_max = grid.r_max();
    let boundary_potential = scale.potential(m, r_max, profile.potential(r_max));
    Ok(FiberOperator {
        m,
        scale,
        boundary,
        grid: *grid,
        potential,
        boundary_potential,
        matrix: SymTridiagonal::new(diag, off)?,
    })
}

/// Lowest eigenpairs of one fiber.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Radial functions u_j normalized so that Σ u_j² r_j Δr = 1.
    pub vectors: Vec<Vec<f64>>,
    pub grid: RadialGrid,
    pub m: i64,
    pub scale: Scale,
    pub boundary: Boundary,
}

impl EigenResult {
    /// Discrete r·dr inner product of two eigenvectors.
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        let prod: Vec<f64> = self.vectors[i]
            .iter()
            .zip(&self.vectors[j])
            .map(|(a, b)| a * b)
            .collect();
        self.grid.integrate_r(&prod)
    }
}

/// The `k` lowest eigenpairs of `op`.
pub fn eigs_lowest(op: &FiberOperator, k: usize) -> Result<EigenResult> {
    if k == 0 || k > op.grid.len() / 4 {
        return Err(invalid(
            "k",
            format!("need 1 <= k <= N/4 = {}, got {k}", op.grid.len() / 4),
        ));
    }
    let (values, symmetric) = op.matrix.lowest_eigenpairs(k)?;
    let dr = op.grid.dr();
    let vectors = symmetric
        .into_iter()
        .map(|v| {
            let mut u: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(j, x)| x / (op.grid.node(j) * dr).sqrt())
                .collect();
            // fix the sign by the first sizeable entry
            let peak = u.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            if let Some(first) = u.iter().find(|x| x.abs() > 1e-3 * peak) {
                if *first < 0.0 {
                    u.iter_mut().for_each(|x| *x = -*x);
                }
            }
            u
        })
        .collect();
    Ok(EigenResult {
        values,
        vectors,
        grid: op.grid,
        m: op.m,
        scale: op.scale,
        boundary: op.boundary,
    })
}

/// Eigenpairs on `grid` with eigenvalues Richardson-extrapolated against the
/// half-resolution grid: (4 λ_N - λ_{N/2}) / 3. Vectors come from `grid`.
pub fn eigs_lowest_extrapolated(
    profile: &FieldProfile,
    m: i64,
    scale: Scale,
    grid: &RadialGrid,
    boundary: Boundary,
    k: usize,
) -> Result<EigenResult> {
    let coarse = grid.coarsened()?;
    let fine_op = assemble_fiber(profile, m, scale, grid, boundary)?;
    let coarse_op = assemble_fiber(profile, m, scale, &coarse, boundary)?;
    let mut fine = eigs_lowest(&fine_op, k)?;
    let coarse_values = coarse_op.matrix.lowest_eigenvalues(k);
    for (v, c) in fine.values.iter_mut().zip(&coarse_values) {
        *v = (4.0 * *v - c) / 3.0;
    }
    Ok(fine)
}

/// One eigenvalue tagged by its sector and in-sector index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorLevel {
    pub value: f64,
    pub m: i64,
    pub k: usize,
}

/// Options shared by the sector sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub boundary: Boundary,
    pub extrapolate: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            boundary: Boundary::DirichletFar,
            extrapolate: true,
        }
    }
}

/// The `k` lowest eigenvalues in every sector of `m_range`, ordered by
/// (value, m, k).
pub fn sector_sweep(
    profile: &FieldProfile,
    scale: Scale,
    grid: &RadialGrid,
    m_range: (i64, i64),
    k: usize,
    options: SweepOptions,
) -> Result<Vec<SectorLevel>> {
    let (lo, hi) = m_range;
    if lo > hi {
        return Err(invalid("m_range", format!("empty range [{lo}, {hi}]")));
    }
    let per_sector: Vec<Result<Vec<SectorLevel>>> = (lo..=hi)
        .into_par_iter()
        .map(|m| {
            let values = if options.extrapolate {
                eigs_lowest_extrapolated(profile, m, scale, grid, options.boundary, k)?.values
            } else {
                let op = assemble_fiber(profile, m, scale, grid, options.boundary)?;
                op.matrix.lowest_eigenvalues(k)
            };
            Ok(values
                .into_iter()
                .enumerate()
                .map(|(k, value)| SectorLevel { value, m, k })
                .collect())
        })
        .collect();
    let mut levels = Vec::new();
    for sector in per_sector {
        levels.extend(sector?);
    }
    sort_levels(&mut levels);
    Ok(levels)
}

pub fn sort_levels(levels: &mut [SectorLevel]) {
    levels.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.m.cmp(&b.m))
            .then(a.k.cmp(&b.k))
    });
}

/// Strictly increasing list of distinct levels (sorted input).
pub fn distinct_levels(sorted: &[SectorLevel]) -> Vec<SectorLevel> {
    let mut out: Vec<SectorLevel> = Vec::new();
    for level in sorted {
        match out.last() {
            Some(prev) if (level.value - prev.value).abs() <= DEDUP_TOLERANCE * (1.0 + prev.value.abs()) => {}
            _ => out.push(*level),
        }
    }
    out
}

/// Default angular momentum window `[-(2 n_max + 8), 2 n_max + 8]`.
pub fn default_m_range(n_max: usize) -> (i64, i64) {
    let w = 2 * n_max as i64 + 8;
    (-w, w)
}

/// Merged lowest `n_max + 1` distinct levels over `m_range`, with the
/// truncation and sector-range checks applied.
pub fn merged_levels(
    profile: &FieldProfile,
    scale: Scale,
    grid: &RadialGrid,
    n_max: usize,
    m_range: (i64, i64),
    options: SweepOptions,
) -> Result<Vec<SectorLevel>> {
    let sweep = sector_sweep(profile, scale, grid, m_range, n_max + 1, options)?;
    let distinct = distinct_levels(&sweep);
    if distinct.len() < n_max + 1 {
        return Err(MagresError::InsufficientSamples {
            needed: n_max + 1,
            got: distinct.len(),
        });
    }
    let levels: Vec<SectorLevel> = distinct[..=n_max].to_vec();
    let top = levels[n_max].value;
    if options.boundary == Boundary::DirichletFar {
        for m in m_range.0..=m_range.1 {
            assemble_fiber(profile, m, scale, grid, options.boundary)?.check_truncation(top)?;
        }
    }
    // an edge sector must not add a level below the cutoff that no interior
    // sector reproduces (degenerate levels are repeated in every sector)
    if m_range.0 < m_range.1 {
        let close = |a: f64, b: f64| (a - b).abs() <= DEDUP_TOLERANCE * (1.0 + b.abs());
        for edge in [m_range.0, m_range.1] {
            let interior: Vec<f64> = sweep
                .iter()
                .filter(|l| l.m != m_range.0 && l.m != m_range.1)
                .map(|l| l.value)
                .collect();
            for low in sweep.iter().filter(|l| l.m == edge) {
                if low.value < top - DEDUP_TOLERANCE * (1.0 + top.abs())
                    && !interior.iter().any(|&v| close(low.value, v))
                {
                    return Err(MagresError::SectorRangeTooNarrow {
                        m: edge,
                        value: low.value,
                        cutoff: top,
                    });
                }
            }
        }
    }
    Ok(levels)
}

/// Anharmonic Landau levels Λ_0^γ < … < Λ_{n_max}^γ of `-Δ + (m/r - r^{1+γ}/(2+γ))²`.
pub fn anharmonic_levels(
    gamma: f64,
    n_max: usize,
    m_range: Option<(i64, i64)>,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let profile = FieldProfile::anharmonic(gamma)?;
    let levels = merged_levels(
        &profile,
        Scale::Field(1.0),
        grid,
        n_max,
        m_range.unwrap_or_else(|| default_m_range(n_max)),
        SweepOptions::default(),
    )?;
    Ok(levels.iter().map(|l| l.value).collect())
}

/// Lowest eigenvalue of the anharmonic fiber at field scale `b` in sector `m`.
pub fn anharmonic_lowest(gamma: f64, b: f64, m: i64, grid: &RadialGrid) -> Result<f64> {
    let profile = FieldProfile::anharmonic(gamma)?;
    let result = eigs_lowest_extrapolated(&profile, m, Scale::Field(b), grid, Boundary::DirichletFar, 1)?;
    let op = assemble_fiber(&profile, m, Scale::Field(b), grid, Boundary::DirichletFar)?;
    op.check_truncation(result.values[0])?;
    Ok(result.values[0])
}

/// Semiclassical levels ẽ_0(h) < … of the radial well B = b0 + r².
pub fn well_levels(
    b0: f64,
    h: f64,
    n_max: usize,
    m_range: Option<(i64, i64)>,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let profile = FieldProfile::radial_well(b0)?;
    let levels = merged_levels(
        &profile,
        Scale::Semiclassical(h),
        grid,
        n_max,
        m_range.unwrap_or_else(|| default_m_range(n_max)),
        SweepOptions::default(),
    )?;
    Ok(levels.iter().map(|l| l.value).collect())
}

/// Grid of `n` points on the disk of radius `rho2` with the island edge `rho1`
/// on a cell face whenever `n·rho1/rho2` is an integer.
pub fn island_grid(rho2: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(rho2, n)
}

/// Eigenvalues ℓ̂_n(b) of the island operator on the disk of radius `rho2`
/// (field 0 for r < rho1, 1 beyond) with Neumann condition at `rho2`.
pub fn island_neumann_levels(
    rho1: f64,
    rho2: f64,
    b: f64,
    n_max: usize,
    m_range: Option<(i64, i64)>,
    n_points: usize,
) -> Result<Vec<f64>> {
    island_neumann_sectors(rho1, rho2, b, n_max, m_range, n_points)
        .map(|levels| levels.iter().map(|l| l.value).collect())
}

/// As [`island_neumann_levels`], keeping the sector of each level.
pub fn island_neumann_sectors(
    rho1: f64,
    rho2: f64,
    b: f64,
    n_max: usize,
    m_range: Option<(i64, i64)>,
    n_points: usize,
) -> Result<Vec<SectorLevel>> {
    if !(rho1 > 0.0 && rho1 < rho2) {
        return Err(invalid("rho1", format!("need 0 < rho1 < rho2, got {rho1}, {rho2}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("must be >= 0, got {b}")));
    }
    let grid = island_grid(rho2, n_points)?;
    // b = 0 is the field-free Neumann disk
    let (profile, scale) = if b == 0.0 {
        (FieldProfile::zero(), Scale::Field(1.0))
    } else {
        (FieldProfile::island(rho1, rho2)?, Scale::Field(b))
    };
    merged_levels(
        &profile,
        scale,
        &grid,
        n_max,
        m_range.unwrap_or_else(|| default_m_range(n_max)),
        SweepOptions {
            boundary: Boundary::NeumannFar,
            extrapolate: true,
        },
    )
}

/// Lowest island eigenpairs in one sector (for decay and quasimode checks).
pub fn island_eigenpairs(
    rho1: f64,
    rho2: f64,
    b: f64,
    m: i64,
    k: usize,
    n_points: usize,
) -> Result<EigenResult> {
    let grid = island_grid(rho2, n_points)?;
    let profile = FieldProfile::island(rho1, rho2)?;
    eigs_lowest_extrapolated(&profile, m, Scale::Field(b), &grid, Boundary::NeumannFar, k)
}

/// Default resolution for Dirichlet disk levels.
pub const DISK_POINTS: usize = 4000;

/// Dirichlet eigenvalues ℓ_0 < ℓ_1 < … of the disk of radius `rho1`,
/// cross-checked against squared Bessel zeros j_{|m|,k}²/ρ₁².
pub fn dirichlet_disk_levels(rho1: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(rho1 > 0.0 && rho1.is_finite()) {
        return Err(invalid("rho1", format!("must be positive, got {rho1}")));
    }
    // distinct (|m|, k) pairs ordered by Bessel zero
    let mut candidates: Vec<(f64, i64, usize)> = Vec::new();
    for m in 0..=(n_max as i64 + 1) {
        for (k, z) in bessel_j_zeros(m, n_max + 1)?.into_iter().enumerate() {
            candidates.push((z, m, k));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(n_max + 1);

    let grid = RadialGrid::new(rho1, DISK_POINTS)?;
    let profile = FieldProfile::zero();
    let mut levels = Vec::with_capacity(n_max + 1);
    for (index, &(zero, m, k)) in candidates.iter().enumerate() {
        let result = eigs_lowest_extrapolated(&profile, m, Scale::Field(1.0), &grid, Boundary::DirichletFar, k + 1)?;
        let solver = result.values[k];
        let bessel = zero * zero / (rho1 * rho1);
        if (solver - bessel).abs() > 1e-6 * bessel.max(1.0) {
            return Err(MagresError::BesselMismatch { index, solver, bessel });
        }
        levels.push(solver);
    }
    levels.sort_by(|a, b| a.total_cmp(b));
    Ok(levels)
}

/// log|u_j| for an eigenvector, continued through the far tail by the
/// backward ratio recurrence of the three-term equation so that values far
/// below the floating-point range stay meaningful.
fn log_magnitudes(op: &FiberOperator, value: f64, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let grid = &op.grid;
    let d = &op.matrix.diag;
    let e = &op.matrix.off;
    // ratio[j] = v_{j+1} / v_j for the symmetrized vector v = √r·u
    let mut ratio = vec![0.0; n];
    ratio[n - 1] = 0.0;
    for j in (1..n).rev() {
        let denom = (d[j] - value) + if j + 1 < n { e[j] * ratio[j] } else { 0.0 };
        ratio[j - 1] = -e[j - 1] / denom;
    }
    let peak = u.iter().enumerate().fold((0, 0.0_f64), |acc, (j, x)| {
        if x.abs() > acc.1 {
            (j, x.abs())
        } else {
            acc
        }
    });
    let anchor = (peak.0..n)
        .find(|&j| u[j].abs() < 1e-6 * peak.1)
        .unwrap_or(n - 1);
    let mut log_u = vec![f64::NEG_INFINITY; n];
    for j in 0..=anchor {
        log_u[j] = u[j].abs().ln();
    }
    for j in anchor..n - 1 {
        let ratio_u = ratio[j] * (grid.node(j) / grid.node(j + 1)).sqrt();
        log_u[j + 1] = log_u[j] + ratio_u.abs().ln();
    }
    // signed u ratios for derivative traces
    let ratio_u: Vec<f64> = (0..n)
        .map(|j| {
            if j + 1 < n {
                if j < anchor && u[j] != 0.0 {
                    u[j + 1] / u[j]
                } else {
                    ratio[j] * (grid.node(j) / grid.node(j + 1)).sqrt()
                }
            } else {
                0.0
            }
        })
        .collect();
    (log_u, ratio_u)
}

/// log Σ exp(x_i), ignoring -∞ terms.
fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.filter(|x| x.is_finite() || *x == f64::INFINITY).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// log of ∫(|u'|² + |u|²) e^{2 c0 r^{2+γ}} r dr for eigenpair `index`,
/// computed in log space.
pub fn log_agmon_integral(op: &FiberOperator, result: &EigenResult, index: usize, gamma: f64, c0: f64) -> f64 {
    let u = &result.vectors[index];
    let value = op.matrix.eigenvalue(index);
    let (log_u, ratio) = log_magnitudes(op, value, u);
    let grid = &op.grid;
    let dr = grid.dr();
    let n = u.len();
    log_sum_exp((0..n).map(|j| {
        let r = grid.node(j);
        // centered difference (u_{j+1} - u_{j-1}) / 2Δr = u_j (ρ_j - 1/ρ_{j-1}) / 2Δr
        let forward = ratio[j];
        let backward = if j > 0 && ratio[j - 1] != 0.0 { 1.0 / ratio[j - 1] } else { 0.0 };
        let slope = (forward - backward) / (2.0 * dr);
        2.0 * log_u[j] + (1.0 + slope * slope).ln() + 2.0 * c0 * r.powf(2.0 + gamma) + (r * dr).ln()
    }))
}

/// Outcome of an Agmon decay check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub integral: f64,
    pub doubled: f64,
}

/// Weighted tail integral of the `index`-th anharmonic eigenfunction at b = 1
/// in sector `m`, checked for stability when r_max doubles.
pub fn verify_ah_decay(gamma: f64, c0: f64, m: i64, index: usize, grid: &RadialGrid) -> Result<DecayCheck> {
    if !(c0 >= 0.0) {
        return Err(invalid("c0", format!("must be >= 0, got {c0}")));
    }
    let profile = FieldProfile::anharmonic(gamma)?;
    // the three-point tail only decays at the continuum rate while √V·Δr stays O(1)
    let far = grid.extended();
    let stiffness = Scale::Field(1.0)
        .potential(m, far.r_max(), profile.potential(far.r_max()))
        .sqrt()
        * far.dr();
    if stiffness > 1.0 {
        return Err(invalid(
            "grid_n",
            format!("grid does not resolve the decay up to 2 r_max (sqrt(V) dr = {stiffness:.3})"),
        ));
    }
    let mut logs = [0.0; 2];
    for (slot, g) in [*grid, grid.extended()].iter().enumerate() {
        let op = assemble_fiber(&profile, m, Scale::Field(1.0), g, Boundary::DirichletFar)?;
        let result = eigs_lowest(&op, index + 1)?;
        op.check_truncation(result.values[index])?;
        logs[slot] = log_agmon_integral(&op, &result, index, gamma, c0);
    }
    let check = DecayCheck {
        integral: logs[0].exp(),
        doubled: logs[1].exp(),
    };
    // compare logarithms so that overflowed integrals are still flagged
    if !(logs[1] - logs[0] <= 1.1_f64.ln()) || !logs[0].is_finite() || !check.integral.is_finite() {
        return Err(MagresError::DecayUnstable {
            base: check.integral,
            doubled: check.doubled,
        });
    }
    Ok(check)
}

/// I(b) = ∫_{ρ₁<r<ρ₂} (|ψ|² + |(-i∇ - bA)ψ|²) e^{½√b (r-ρ₁)} r dr for the
/// `index`-th vector of an island result (set `weighted = false` for weight 1).
pub fn island_decay_integral(result: &EigenResult, index: usize, b: f64, rho1: f64, weighted: bool) -> Result<f64> {
    let profile = FieldProfile::island(rho1, result.grid.r_max())?;
    let u = &result.vectors[index];
    let grid = &result.grid;
    let dr = grid.dr();
    let n = u.len();
    let m = result.m as f64;
    let mut total = 0.0;
    for j in 0..n {
        let r = grid.node(j);
        if r <= rho1 {
            continue;
        }
        // one-sided at the Neumann wall (ghost u_N = u_{N-1})
        let slope = if j + 1 < n {
            (u[j + 1] - u[j - 1]) / (2.0 * dr)
        } else {
            (u[j] - u[j - 1]) / (2.0 * dr)
        };
        let w = m / r - b * profile.potential(r);
        let density = u[j] * u[j] + slope * slope + w * w * u[j] * u[j];
        let weight = if weighted { (0.5 * b.sqrt() * (r - rho1)).exp() } else { 1.0 };
        total += density * weight * r * dr;
    }
    Ok(total)
}

/// b·I(b) for each b in `fields` (lowest island state, sector m = 0), failing
/// if it more than doubles across the sweep.
pub fn verify_island_decay(rho1: f64, rho2: f64, fields: &[f64], n_points: usize) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<Result<(f64, f64)>> = fields
        .par_iter()
        .map(|&b| {
            let result = island_eigenpairs(rho1, rho2, b, 0, 1, n_points)?;
            let integral = island_decay_integral(&result, 0, b, rho1, true)?;
            Ok((b, b * integral))
        })
        .collect();
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    if let (Some(first), Some(max)) = (
        rows.first(),
        rows.iter().map(|r| r.1).reduce(f64::max),
    ) {
        if !(max <= 2.0 * first.1) {
            return Err(MagresError::DecayUnstable {
                base: first.1,
                doubled: max,
            });
        }
    }
    Ok(rows)
}

/// Rows (m, index, eigenvalue, b_or_h, gridN, r_max) for CSV emission.
pub fn level_rows(levels: &[SectorLevel], scale: Scale, grid: &RadialGrid) -> Vec<(i64, usize, f64, f64, usize, f64)> {
    levels
        .iter()
        .map(|l| (l.m, l.k, l.value, scale.value(), grid.len(), grid.r_max()))
        .collect()
}
