//! Tridiagonal eigen-solvers.
//!
//! Every fiber operator in this crate is three-point, so the matrices are
//! tridiagonal: real symmetric for self-adjoint fibers and complex symmetric
//! (not Hermitian) for complex-scaled ones.
//!
//! * [`SymTridiagonal`]: lowest eigenvalues by Sturm-sequence bisection, vectors
//!   by inverse iteration.
//! * [`ComplexSymTridiagonal`]: all eigenvalues by an implicit QL sweep with
//!   complex-orthogonal rotations, plus Rayleigh-quotient polishing of selected
//!   eigenvalues.

use num_complex::Complex64;
use num_traits::{One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{MagresError, Result};

/// Field of scalars the tridiagonal LU works over.
pub trait Scalar:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// LU factorization of a tridiagonal matrix with partial pivoting
/// (the `gttrf` layout: two super-diagonals after pivoting).
struct TridiagonalLu<T: Scalar> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper1: Vec<T>,
    upper2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TridiagonalLu<T> {
    /// Factor `A - shift` where `A` has diagonal `diag`, sub-diagonal `sub`
    /// and super-diagonal `sup`.
    fn factor(diag: &[T], sub: &[T], sup: &[T], shift: T) -> Self {
        let n = diag.len();
        let mut d: Vec<T> = diag.iter().map(|&x| x - shift).collect();
        let mut dl: Vec<T> = sub.to_vec();
        let mut du: Vec<T> = sup.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].modulus() >= dl[i].modulus() {
                // no row interchange
                if d[i].modulus() > 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] = d[i + 1] - fact * du[i];
                } else {
                    dl[i] = T::zero();
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        // Exactly singular pivots are nudged so that inverse iteration at an
        // exact eigenvalue still produces a usable direction.
        let scale = d.iter().map(|x| x.modulus()).fold(0.0_f64, f64::max).max(1.0);
        for x in d.iter_mut() {
            if x.modulus() == 0.0 {
                *x = T::from_real(f64::EPSILON * scale);
            }
        }
        Self {
            lower: dl,
            diag: d,
            upper1: du,
            upper2: du2,
            swapped,
        }
    }

    fn solve_in_place(&self, b: &mut [T]) {
        let n = self.diag.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] = b[i + 1] - self.lower[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.lower[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper1[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper1[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}

/// Deterministic, non-degenerate starting vector for inverse iteration.
fn start_vector<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::from_real(1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).fract()))
        .collect()
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(crate::error::invalid("diag", "matrix must be non-empty"));
        }
        if off.len() + 1 != diag.len() {
            return Err(crate::error::invalid(
                "off",
                format!("expected {} off-diagonal entries, got {}", diag.len() - 1, off.len()),
            ));
        }
        if diag.iter().chain(off.iter()).any(|x| !x.is_finite()) {
            return Err(crate::error::invalid("diag", "matrix entries must be finite"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_estimate(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count from the LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::EPSILON * self.norm_estimate();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * self.norm_estimate();
        lo -= pad;
        hi += pad;
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        (0..k.min(self.len())).map(|i| self.eigenvalue(i)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Unit eigenvector (Euclidean norm) for the eigenvalue `lambda`,
    /// orthogonalized against `previous`.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.len();
        let norm = self.norm_estimate();
        let lu = TridiagonalLu::factor(&self.diag, &self.off, &self.off, lambda);
        let mut x: Vec<f64> = start_vector(n);
        let mut residual = f64::INFINITY;
        for iteration in 0..8 {
            lu.solve_in_place(&mut x);
            for p in previous {
                let proj: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(p).for_each(|(xi, pi)| *xi -= proj * pi);
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(MagresError::NoConvergence {
                    iterations: iteration + 1,
                    residual,
                });
            }
            x.iter_mut().for_each(|v| *v /= nrm);
            let ax = self.apply(&x);
            residual = ax
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= 1e-10 * norm && iteration >= 1 {
                return Ok(x);
            }
        }
        if residual <= 1e-8 * norm {
            Ok(x)
        } else {
            Err(MagresError::NoConvergence {
                iterations: 8,
                residual,
            })
        }
    }

    /// The `k` smallest eigenpairs; vectors have unit Euclidean norm.
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let values = self.lowest_eigenvalues(k);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        for &lambda in &values {
            let v = self.eigenvector(lambda, &vectors)?;
            vectors.push(v);
        }
        Ok((values, vectors))
    }
}

/// Complex symmetric (`A = Aᵀ`) tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSymTridiagonal {
    pub diag: Vec<Complex64>,
    pub off: Vec<Complex64>,
}

const QL_MAX_SWEEPS: usize = 60;

impl ComplexSymTridiagonal {
    pub fn new(diag: Vec<Complex64>, off: Vec<Complex64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(crate::error::invalid(
                "off",
                "complex tridiagonal needs n diagonal and n-1 off-diagonal entries",
            ));
        }
        if diag.iter().chain(off.iter()).any(|z| !z.is_finite()) {
            return Err(crate::error::invalid("diag", "matrix entries must be finite"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn max_entry(&self) -> f64 {
        self.diag
            .iter()
            .chain(self.off.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// All eigenvalues, unordered, by implicit QL with Wilkinson-type shifts.
    ///
    /// The rotations satisfy `c² + s² = 1` over ℂ, preserving complex symmetry.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let n = self.len();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(Complex64::zero());
        let one = Complex64::one();
        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].norm() + d[m + 1].norm();
                    if e[m].norm() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return Err(MagresError::ComplexEigenFailure {
                        index: l,
                        iterations: sweeps,
                        size: n,
                        max_entry: self.max_entry(),
                    });
                }
                let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
                let mut r = (g * g + one).sqrt();
                let r_signed = if (g.conj() * r).re < 0.0 { -r } else { r };
                g = d[m] - d[l] + e[l] / (g + r_signed);
                let mut s = one;
                let mut c = one;
                let mut p = Complex64::zero();
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = (f * f + g * g).sqrt();
                    e[i + 1] = r;
                    if r.norm() <= f64::MIN_POSITIVE * (f.norm() + g.norm()).max(1.0) {
                        if f.norm() > 0.0 && g.norm() > 0.0 {
                            // isotropic rotation: c² + s² = 0 has no normalization
                            return Err(MagresError::ComplexEigenFailure {
                                index: i,
                                iterations: sweeps,
                                size: n,
                                max_entry: self.max_entry(),
                            });
                        }
                        d[i + 1] -= p;
                        e[m] = Complex64::zero();
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + c * b * 2.0;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = Complex64::zero();
            }
        }
        Ok(d)
    }

    /// Polish an approximate eigenvalue by shifted inverse iteration followed by
    /// Rayleigh-quotient steps in the bilinear form `xᵀ A x / xᵀ x`.
    ///
    /// Returns the refined eigenvalue and its eigenvector (bilinear-normalized
    /// so that `xᵀ x = 1`).
    pub fn refine(&self, guess: Complex64) -> Result<(Complex64, Vec<Complex64>)> {
        let n = self.len();
        let scale = self.max_entry().max(1.0);
        let mut x: Vec<Complex64> = start_vector(n);
        let mut shift = guess;
        let mut rho = guess;
        for iteration in 0..12 {
            let lu = TridiagonalLu::factor(&self.diag, &self.off, &self.off, shift);
            lu.solve_in_place(&mut x);
            let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(MagresError::NoConvergence {
                    iterations: iteration + 1,
                    residual: f64::NAN,
                });
            }
            x.iter_mut().for_each(|z| *z /= nrm);
            let ax = self.apply(&x);
            let num: Complex64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let den: Complex64 = x.iter().map(|a| a * a).sum();
            let next = num / den;
            let converged = (next - rho).norm() <= 4.0 * f64::EPSILON * scale;
            rho = next;
            // two fixed-shift steps first, so the iterate locks onto the
            // eigenvector nearest the guess before the shift moves
            if iteration >= 2 {
                shift = rho;
            }
            if converged && iteration >= 3 {
                break;
            }
        }
        let ax = self.apply(&x);
        let residual = ax
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - rho * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > 1e-7 * scale {
            return Err(MagresError::NoConvergence {
                iterations: 12,
                residual,
            });
        }
        let den: Complex64 = x.iter().map(|a| a * a).sum();
        let s = den.sqrt();
        if s.norm() > 0.0 {
            x.iter_mut().for_each(|z| *z /= s);
        }
        Ok((rho, x))
    }
}
