use thiserror::Error;

/// Errors raised across the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0} (at most 8)")]
    UnsupportedDimension(usize),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("eigenvalue {value:.3e} is below the PSD tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("invalid wire selection: {0}")]
    InvalidWires(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("M(t) - I lost positivity at t = {t} (min eigenvalue {min_eig:.3e}); calibration horizon exceeded")]
    PsdViolation { t: f64, min_eig: f64 },

    #[error("integration step too coarse: unitarity defect {defect:.3e}")]
    StepTooCoarse { defect: f64 },

    #[error("post-selection starved: success probability {success:.3e} below floor {floor:.1e}")]
    PostselectionStarved { success: f64, floor: f64 },

    #[error("readout matrix is singular (f0 + f1 must exceed 1)")]
    SingularReadout,

    #[error("missing measurement setting {0}")]
    MissingSetting(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid shot table: {0}")]
    InvalidShots(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
