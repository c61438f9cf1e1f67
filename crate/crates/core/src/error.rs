use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {point:?} is not in the open sector (walls and origin are excluded)")]
    OutsideSector { point: Vec<f64> },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("weight field is not strictly positive at node {index} (value {value:e})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error(
        "alpha = {alpha} is not below 2/(gamma+m) = {critical}: the integral of ||Psi(t)||^alpha diverges at t = 0"
    )]
    Supercritical { alpha: f64, critical: f64 },

    #[error("Picard iteration is not contracting at sweep {sweep}: ratio {ratio:.4} (bound {bound:.4})")]
    NonContraction { sweep: usize, ratio: f64, bound: f64 },

    #[error("Picard iteration did not reach tolerance {tol:e} in {iterations} sweeps (last increment {last:e})")]
    NoConvergence { iterations: usize, tol: f64, last: f64 },

    #[error("identical data: the Lipschitz ratio has a zero denominator")]
    ZeroDenominator,

    #[error("data changes sign on the sector (min {min:e}); a nonnegative limit is required")]
    SignChanging { min: f64 },

    #[error("profile {0} cannot be used here")]
    UnsupportedProfile(String),

    #[error("quadrature did not converge across refinement levels: {0}")]
    Quadrature(String),

    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
