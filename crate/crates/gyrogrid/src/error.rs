//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by parameter mapping, operator construction, and sweeps.
#[derive(Debug, Error)]
pub enum Error {
    /// G/G₀ has no rational approximation p/q with q ≤ 64 within tolerance.
    #[error("conductance ratio {value} has no rational p/q (q ≤ {max_den}) within {tol:e}")]
    NonRationalFlux { value: f64, max_den: u64, tol: f64 },

    /// An operation requiring the inductive confinement was called without L.
    #[error("operation requires an inductance (confinement), but none was given")]
    MissingInductance,

    /// Squeezing is undefined at zero confinement.
    #[error("squeezing parameter is undefined at zero confinement (ħω₀/V = 0)")]
    ZeroConfinement,

    /// Gate time diverges at zero drive current.
    #[error("gate time is undefined for zero drive current")]
    ZeroCurrent,

    /// Two sampled wavefunctions live on different grids.
    #[error("sampled wavefunctions live on mismatched grids")]
    GridMismatch,

    /// Grid does not span the support required by the comb state.
    #[error("grid [{min}, {max}] too narrow; need at least [-{need}, {need}]")]
    GridTooNarrow { min: f64, max: f64, need: f64 },

    /// Quadrature of the 2-D lift lost too much norm.
    #[error("2-D lift norm defect {defect:e} exceeds 1% (grid too coarse or too narrow)")]
    GridTooCoarse { defect: f64 },

    /// A sweep was requested over an empty grid.
    #[error("sweep requested over an empty grid")]
    EmptyGrid,

    /// Matrix failed the Hermiticity check.
    #[error("matrix is not Hermitian (max |H - H†| = {defect:e})")]
    NonHermitianInput { defect: f64 },

    /// Rotation checks need a square, symmetric grid.
    #[error("operation requires a square symmetric grid")]
    NonSquareGrid,

    /// Theta functions require Im τ > 0.
    #[error("theta function requires Im(tau) > 0, got {im_tau}")]
    BadTau { im_tau: f64 },

    /// Parameter validation failure.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dense eigensolver backend failure.
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
