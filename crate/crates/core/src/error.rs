use thiserror::Error;

/// Errors surfaced by the field-theory toolkit.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("nonlinearity has no split-potential form; Laplace residual is undefined")]
    NonPotentialNonlinearity,

    #[error("singular Legendre fiber map: min |det| = {min_det:.3e} below threshold {threshold:.1e}")]
    SingularLegendre { min_det: f64, threshold: f64 },

    #[error("fiber inversion did not converge after {iters} iterations (residual {residual:.3e})")]
    FiberInversionFailed { iters: usize, residual: f64 },

    #[error("step rejected: action increased by {increase:.3e} (> {tol:.1e}); reduce ds")]
    StepRejected { increase: f64, tol: f64 },

    #[error("non-finite field values encountered at s = {s}")]
    NonFinite { s: f64 },

    #[error("cutoff radius must satisfy rho >= 1, got {0}")]
    InvalidCutoff(f64),

    #[error("trajectory too coarse in s for second derivatives: {0}")]
    InsufficientSResolution(String),

    #[error("s-window resolution mismatch: {0}")]
    ResolutionMismatch(String),

    #[error("eigenvalue extraction failed: {0}")]
    EigenStructure(String),

    #[error("dump format error: {0}")]
    DumpFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
