//! Bessel functions of the first kind and their positive zeros.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// J_n(x) for integer order via Bessel's integral
/// `J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ`.
///
/// The integrand extends to a smooth 2π-periodic function, so the trapezoid
/// rule converges geometrically once the node count exceeds |x| + |n|.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let nodes = 64 + 2 * (x.abs() as usize + n.unsigned_abs() as usize);
    let step = PI / nodes as f64;
    let nf = n as f64;
    let mut sum = 0.5 * (1.0 + (nf * PI).cos());
    for k in 1..nodes {
        let tau = k as f64 * step;
        sum += (nf * tau - x * tau.sin()).cos();
    }
    sum * step / PI
}

/// The first `count` positive zeros of J_n, ascending.
pub fn bessel_j_zeros(n: i64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("count", "need at least one zero"));
    }
    let mut zeros = Vec::with_capacity(count);
    let step = 0.05;
    let mut lo = if n == 0 { step } else { n.unsigned_abs() as f64 };
    let mut f_lo = bessel_j(n, lo);
    while zeros.len() < count {
        let hi = lo + step;
        let f_hi = bessel_j(n, hi);
        if f_lo == 0.0 {
            zeros.push(lo);
        } else if f_lo * f_hi < 0.0 {
            zeros.push(bisect(|x| bessel_j(n, x), lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(zeros)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
