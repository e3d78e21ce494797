use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Every variant carries enough context to tell which input or grid point
/// triggered it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("degenerate spectrum: |E_{i} - E_{j}| = {gap:e} is within the threshold {threshold:e}")]
    DegenerateSpectrum {
        i: usize,
        j: usize,
        gap: f64,
        threshold: f64,
    },
    #[error("degenerate regime: {0}")]
    DegenerateRegime(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range: {reason}")]
    IndexOutOfRange { index: usize, reason: String },
    #[error("branch jump at t = {t}: {reason}")]
    BranchJump { t: f64, reason: String },
    #[error("tangent pole at t = {t}: (Delta - i gamma/2)^2 + Omega_R^2 vanishes")]
    TanPole { t: f64 },
    #[error("unguardable singularity at t = {t}: Re[sin theta] = {re_sin:e}, Im[dtheta] = {im_dtheta:e}")]
    SinThetaSingular { t: f64, re_sin: f64, im_dtheta: f64 },
    #[error("gauge factor vanishes at grid index {0}")]
    ZeroGauge(usize),
    #[error("inconsistent lambda choice at t = {t}: {reason}")]
    InconsistentChoice { t: f64, reason: String },
    #[error("policy mismatch: {0}")]
    PolicyMismatch(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("eigenvector path lost continuity at grid index {index}: best overlap {overlap}")]
    PathDiscontinuity { index: usize, overlap: f64 },
    #[error("eigenvalue iteration did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },
    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
