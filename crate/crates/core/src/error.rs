use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("critical point has Hessian signature ({pos},{neg}), expected ({expected_pos},1)")]
    WrongSignature {
        pos: usize,
        neg: usize,
        expected_pos: usize,
    },

    #[error("well and sea merge at energy {energy} on this grid")]
    SingleComponent { energy: f64 },

    #[error("fill infeasible: {0}")]
    FillInfeasible(String),

    #[error("no sublevel root along the transversal at energy {energy}")]
    NoRoot { energy: f64 },

    #[error("region undefined: {0}")]
    RegionUndefined(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("matrix is not flagged Hermitian")]
    NotHermitian,

    #[error("eigensolver failed to converge")]
    EigNoConvergence,

    #[error("window reaches depth {depth:.3e} but the rotated sector only covers {covered:.3e}")]
    WindowUncovered { depth: f64, covered: f64 },

    #[error("denominator matrix is singular at z = {z}")]
    SingularDenominator { z: num_complex::Complex64 },

    #[error("contour refinement cap exceeded ({points} points); eigenvalue too close to the contour")]
    RefinementCapExceeded { points: usize },

    #[error("no sample satisfies the hypothesis inequality; constants look miscalibrated")]
    NoHypothesisSamples,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
