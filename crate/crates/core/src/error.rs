use thiserror::Error;

/// Errors raised by the geometry, flow, diagnostics and shrinker modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric degeneracy at vertex {vertex}: {reason}")]
    NumericDegeneracy { vertex: usize, reason: String },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("step rejected: dt = {dt:e} exceeds the admissible {admissible:e}")]
    StepRejected { dt: f64, admissible: f64 },

    #[error("blow-up detected at time {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("dirichlet quotient undefined: energy {energy:e} is below the floor {floor:e}")]
    QuotientUndefined { energy: f64, floor: f64 },

    #[error("graph decomposition failed: curve is not star-shaped near angle {angle:.6}")]
    GraphDecompositionFailed { angle: f64 },

    #[error("fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("insufficient data: need {needed} samples, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
