//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no solitary wave exists for speed c = {0} (need c > 1)")]
    NoSolitaryWave(f64),
    #[error("grid too short: profile tail at the domain edge is {tail:.3e} of the amplitude (limit {limit:.1e})")]
    TailTruncation { tail: f64, limit: f64 },
    #[error("invalid train: {0}")]
    InvalidTrain(String),
    #[error("CFL violation: |u|_max dt/dx = {ratio:.3} exceeds guard {guard}; suggested dt <= {suggested_dt:.3e}")]
    CflViolation {
        ratio: f64,
        guard: f64,
        suggested_dt: f64,
    },
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("weight audit failed: {0}")]
    WeightAudit(String),
    #[error("weight scale K = {0} below the admissible minimum 5")]
    WeightScaleTooSmall(f64),
    #[error("partition midpoint {0} lies outside the grid")]
    MidpointOutsideGrid(f64),
    #[error("modulation fit failed: {0}")]
    FitFailed(String),
    #[error("degenerate train: localized-energy denominator {denom:.3e} below half the single-wave energy {floor:.3e}")]
    DegenerateTrain { denom: f64, floor: f64 },
    #[error("non-positive weight passed where a positive weight is required")]
    NonPositiveWeight,
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
