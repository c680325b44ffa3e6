//! Spectra and resonances of planar magnetic Laplacians with radial fields.
//!
//! Every computation reduces to one angular-momentum sector at a time: a
//! real symmetric tridiagonal fiber for bound states, a complex symmetric one
//! along a rotated contour for resonances.

pub mod bessel;
pub mod error;
pub mod field;
pub mod fit;
pub mod levels;
pub mod linalg;
pub mod quasimode;
pub mod radial;
pub mod scaling;
pub mod step;

pub use error::{MagresError, Result};

/// Environment variable capping the rayon worker count.
pub const THREADS_ENV: &str = "MAGRES_THREADS";

/// Size the global rayon pool from `MAGRES_THREADS` if set. Returns the
/// requested count, or `None` when the variable is unset.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| MagresError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool already built by an earlier call keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
