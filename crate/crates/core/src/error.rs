use thiserror::Error;

/// Errors produced by mesh construction, assembly, solvers and the time
/// integrator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has non-positive diagonal entry at row {row}")]
    BadDiagonal { row: usize },

    #[error("matrix is not positive definite (p^T A p = {curvature:.3e} at iteration {iteration})")]
    NotPositiveDefinite { curvature: f64, iteration: usize },

    #[error(
        "solver did not converge: {iterations} iterations, relative residual {residual:.3e} (tolerance {tolerance:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error(
        "coefficient {value:.6e} outside admissible range [{min:.3}, {max:.3}] at ({x:.4}, {y:.4}, {z:.4})"
    )]
    CoefficientRange {
        value: f64,
        min: f64,
        max: f64,
        x: f64,
        y: f64,
        z: f64,
    },

    #[error("point ({x}, {y}, {z}) lies outside the closed unit domain")]
    PointOutsideDomain { x: f64, y: f64, z: f64 },

    #[error(
        "manufactured forcing '{name}' disagrees with the finite-difference oracle at ({x:.4}, {y:.4}, {z:.4}, t={t:.4}): closed form {closed:.8e}, oracle {oracle:.8e}"
    )]
    ForcingMismatch {
        name: &'static str,
        x: f64,
        y: f64,
        z: f64,
        t: f64,
        closed: f64,
        oracle: f64,
    },

    #[error("time step {step} ({stage}) failed: {source}")]
    StepFailed {
        step: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("divergence detected: {0}")]
    Divergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
