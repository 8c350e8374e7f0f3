use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the stage that produces them so the CLI can map
/// them onto its exit codes (config = 2, solver = 3, analysis = 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported dimension {0} (only 1 and 2 are implemented)")]
    UnsupportedDimension(usize),

    #[error("field/grid mismatch: {0}")]
    GridMismatch(String),

    #[error("operator is not an M-matrix: {0}")]
    MMatrixViolation(String),

    #[error("quadrature failed to reach precision {requested:.3e} (achieved {achieved:.3e})")]
    QuadraturePrecision { requested: f64, achieved: f64 },

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
