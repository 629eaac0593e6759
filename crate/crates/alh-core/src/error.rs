//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("specialization tail does not converge (q = {q} is not in (0, 1))")]
    NonConvergentTail { q: f64 },

    #[error("band clipping lost mass {mass:.3e} inside the valid interior (clip_tol = {tol:.3e}); increase band_cutoff")]
    ClipMassExceeded { mass: f64, tol: f64 },

    #[error("pivot at site {site} has magnitude {magnitude:.3e} below tolerance (genericity failure)")]
    PivotFailure { site: i64, magnitude: f64 },

    #[error("zero (or below-tolerance) diagonal entry at site {site} in triangular inversion")]
    ZeroDiagonal { site: i64 },

    #[error("operator is not unit lower triangular at site {site}")]
    NotUnitTriangular { site: i64 },

    #[error("flow right-hand side leaks out of the claimed band support: mass {mass:.3e} > support_tol {tol:.3e}")]
    SupportViolation { mass: f64, tol: f64 },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("empty valid interior (margins {margin_lo}+{margin_hi} exhaust the window of {len} sites)")]
    EmptyInterior { margin_lo: i64, margin_hi: i64, len: usize },

    #[error("non-finite value produced at valid site {site} (band {band})")]
    NumericalBlowup { site: i64, band: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
