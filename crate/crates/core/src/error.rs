use thiserror::Error;

/// Errors raised by grid construction, operators, solvers and integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is not real-valued (max |Im| = {0:e})")]
    NotReal(f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("nonlinearity is not L2-subcritical: need 1 < p < 1 + 4s/n = {bound}, got p = {p}")]
    Supercritical { p: f64, bound: f64 },

    #[error("operator is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("energy increased from {before} to {after} with the minimum step size")]
    EnergyIncrease { before: f64, after: f64 },

    #[error("fixed-point iteration diverged (shift {shift} exceeded cap)")]
    Diverged { shift: f64 },

    #[error("power constraint violated: expected {expected}, got {actual}")]
    ConstraintViolated { expected: f64, actual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("modulation ansatz breaks down: |<Im u, phi>| / |phi|^2 = {0}")]
    ModulationBreakdown(f64),

    #[error("conservation drift too large (energy {energy:e}, power {power:e})")]
    ConservationDrift { energy: f64, power: f64 },

    #[error("all profile entries are below the amplitude threshold")]
    EmptyProfile,

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
