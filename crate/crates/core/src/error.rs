use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("trace does not match solver setup: {0}")]
    TraceMismatch(String),

    #[error("CFL violation: c_max*dt*sqrt(1/dx^2+1/dy^2) = {number:.4} > 1")]
    CflViolation { number: f64 },

    #[error("solver became unstable at step {step}")]
    Unstable { step: usize },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("non-finite iterate at Neumann term {term}")]
    Diverged { term: usize },

    #[error("Hamiltonian drift {drift:e} exceeds tolerance; reduce the step")]
    StepTooLarge { drift: f64 },

    #[error("ray from ({x:.4}, {y:.4}) did not leave the domain within arc length {cap}")]
    TrappedRay { x: f64, y: f64, cap: f64 },
}
