use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("kernel evaluated at coincident points")]
    SingularEvaluation,

    #[error("wavenumber must be positive, got {0}")]
    NonPositiveWavenumber(f64),

    #[error("empty sample set")]
    EmptySamples,

    #[error("point at distance {distance:.3e} from the boundary; formula needs at least {required:.3e}")]
    TooCloseToBoundary { distance: f64, required: f64 },

    #[error("probe line leaves the grid at offset {0:.3e}")]
    ProbeOutsideGrid(f64),

    #[error("cell budget exceeded: {needed} cells requested, cap is {cap}")]
    BudgetExceeded { needed: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wavelength under-resolved: {cells_per_wavelength:.2} cells per interior wavelength (need {required})")]
    UnderResolved { cells_per_wavelength: f64, required: f64 },

    #[error("Krylov iteration did not converge in {iterations} iterations (final residual {final_residual:.3e})")]
    NotConverged {
        iterations: usize,
        final_residual: f64,
        history: Vec<f64>,
    },

    #[error("lipschitz bound violated: slope {slope:.4} exceeds declared constant {declared:.4}")]
    NotLipschitz { slope: f64, declared: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
