use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("samples do not define a function: two coincident points carry values {0} and {1}")]
    NotAFunction(f64, f64),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("cokernel obstruction: normalized mean of the right-hand side is {defect:e} (tolerance {tol:e})")]
    CokernelObstruction { defect: f64, tol: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("left the admissible neighborhood: {0}")]
    NotAdmissible(String),

    #[error("reference metric is not positive for delta = {delta}: minimum density {min_density:e}")]
    NonPositiveReference { delta: f64, min_density: f64 },

    #[error("cohomology normalization violated: defect {defect:e}")]
    Cohomology { defect: f64 },

    #[error("smoothing shortfall: {0}")]
    Smoothing(String),

    #[error("continuity path stalled at t = {t} after {bisections} bisections")]
    PathStalled {
        t: f64,
        bisections: usize,
        trace: Vec<String>,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
