use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the crate. Display strings start with the variant
/// name so that CLI diagnostics identify the failure class.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidInput: {0}")]
    InvalidInput(String),

    /// Adaptive step control could not meet the requested tolerance.
    #[error("StepSizeUnderflow: step fell to {h:.3e} at t = {t:.6e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// Integration finished but energy conservation along the samples is
    /// worse than the 1e-9 relative contract.
    #[error("EnergyDrift: relative energy drift {drift:.3e} exceeds 1e-9")]
    EnergyDrift { drift: f64 },

    #[error("NonpositiveEnergy: E = {0:.6e}, bounded motion requires E > 0")]
    NonpositiveEnergy(f64),

    /// Adaptive quadrature exhausted its refinement budget.
    #[error("SingularQuadrature: no convergence on [{a:.6e}, {b:.6e}]")]
    SingularQuadrature { a: f64, b: f64 },

    #[error("OutsideTrajectory: t = {t:.6e} outside covered span [{lo:.6e}, {hi:.6e}]")]
    OutsideTrajectory { t: f64, lo: f64, hi: f64 },

    /// The endpoint representation of the extremal degenerates.
    #[error("ConjugatePoints: {0}")]
    ConjugatePoints(String),

    /// A phase sine in a closed-form denominator is below threshold.
    #[error("PhaseSingularity: |sin phi| = {sin_phi:.3e} below {threshold:.1e}")]
    PhaseSingularity { sin_phi: f64, threshold: f64 },

    #[error("NoSuchBranch: no extremal with {requested} interior turning points fits the endpoint data")]
    NoSuchBranch { requested: u32 },

    #[error("WrongHierarchy: operation requires n = {expected}, parameters have n = {actual}")]
    WrongHierarchy { expected: u32, actual: u32 },

    #[error("RootFindFailed: {0}")]
    RootFind(String),
}
