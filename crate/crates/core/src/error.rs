//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("theta sample count must be a power of two >= 4, got {0}")]
    BadThetaSize(usize),

    #[error("grid must be strictly increasing")]
    GridNotIncreasing,

    #[error("field is not flagged as decaying at the truncated end")]
    NotDecaying,

    #[error("interpolation point {0} outside source range [{1}, {2}]")]
    InterpOutOfRange(f64, f64, f64),

    #[error("boundary data has nonzero mean ({0:.3e}); no decaying solution for mode 0")]
    NonZeroMean(f64),

    #[error("wall speed alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("layer separation: velocity profile lost positivity (min U^2 = {0:.3e})")]
    LayerSeparation(f64),

    #[error("contraction failure: eta too large (ratio {ratio:.3} after {iterations} iterations)")]
    ContractionFailure { ratio: f64, iterations: usize },

    #[error("psi grid too short: von Mises image reaches Y = {reached:.3}, need {needed:.3}; enlarge psi_max")]
    PsiRangeInsufficient { reached: f64, needed: f64 },

    #[error("Y grid too short for epsilon = {epsilon}: layer coordinate reaches {needed:.2} inside the cutoff support; enlarge y_max")]
    YRangeInsufficient { epsilon: f64, needed: f64 },

    #[error("linear solver stagnated: residual {residual:.3e} after {iterations} iterations (try a nonzero regularization delta)")]
    LinearSolveStagnated { residual: f64, iterations: usize },

    #[error("singular matrix encountered in banded factorization (row {0})")]
    SingularMatrix(usize),

    #[error("Newton iteration diverged at epsilon = {epsilon} (residual {residual:.3e} after {iterations} iterations); seed from a larger epsilon or the composite")]
    NewtonDiverged { epsilon: f64, residual: f64, iterations: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("streamline level {0:.4e} outside the interior range ({1:.4e}, 0)")]
    LevelOutOfRange(f64, f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
