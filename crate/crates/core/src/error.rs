use thiserror::Error;

use crate::central_config::CollinearConfiguration;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("invalid mass system: {0}")]
    InvalidMasses(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("bodies {i} and {j} coincide")]
    Singularity { i: usize, j: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("close approach at t = {time}: bodies {i} and {j} at distance {distance:e}")]
    CloseApproach { time: f64, i: usize, j: usize, distance: f64 },

    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("central configuration solver failed for ordering {ordering:?}: last residual {residual:e}")]
    SolverFailure { ordering: Vec<usize>, residual: f64 },

    #[error("{} distinct collinear configurations found for ordering {ordering:?}", roots.len())]
    AmbiguousRoots { ordering: Vec<usize>, roots: Vec<CollinearConfiguration> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scan resolution {resolution} too coarse: {coarse} vs {fine} points after refinement")]
    Resolution { resolution: usize, coarse: usize, fine: usize },
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
