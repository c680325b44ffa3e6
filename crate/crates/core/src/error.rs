use thiserror::Error;

/// Errors raised by the spectral and resonance routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagresError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid field configuration: {0}")]
    Config(String),

    #[error(
        "truncation unsafe: boundary potential {boundary_potential:.6e} at {position} is below \
         the spectral window {window:.6e} + {margin}"
    )]
    TruncationUnsafe {
        position: f64,
        boundary_potential: f64,
        window: f64,
        margin: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "complex eigensolver failed at index {index} after {iterations} iterations \
         (matrix size {size}, max |entry| {max_entry:.3e})"
    )]
    ComplexEigenFailure {
        index: usize,
        iterations: usize,
        size: usize,
        max_entry: f64,
    },

    #[error("band is flat within tolerance (spread {spread:.3e} over the scan)")]
    FlatBand { spread: f64 },

    #[error("band function has {} local minima in the scan: {candidates:?}", candidates.len())]
    MultipleMinima { candidates: Vec<f64> },

    #[error("no interior minimum of the band function in [{lo}, {hi}]")]
    NoMinimum { lo: f64, hi: f64 },

    #[error("{quantity} must be positive, got {value:.6e}")]
    NotPositive { quantity: &'static str, value: f64 },

    #[error("ambiguous resonance pairing near {re:.10e}{im:+.10e}i: {count} candidates within tolerance")]
    AmbiguousPairing { re: f64, im: f64, count: usize },

    #[error("angular momentum range too narrow: sector {m} contributes {value:.8e} below the cutoff {cutoff:.8e}")]
    SectorRangeTooNarrow { m: i64, value: f64, cutoff: f64 },

    #[error("Agmon weighted integral unstable: {base:.6e} at r_max, {doubled:.6e} at 2 r_max")]
    DecayUnstable { base: f64, doubled: f64 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("Bessel cross-check failed for level {index}: solver {solver:.12e} vs Bessel {bessel:.12e}")]
    BesselMismatch { index: usize, solver: f64, bessel: f64 },
}

pub type Result<T> = std::result::Result<T, MagresError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> MagresError {
    MagresError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl MagresError {
    /// Errors caused by the request rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            MagresError::InvalidParameter { .. }
                | MagresError::Config(_)
                | MagresError::ModelMismatch(_)
                | MagresError::InsufficientSamples { .. }
                | MagresError::SectorRangeTooNarrow { .. }
        )
    }
}
