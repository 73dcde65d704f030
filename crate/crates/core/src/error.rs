use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ball B({center:?}, {radius}) is not compactly inside the Σ-chart")]
    BallEscapesChart { center: [f64; 2], radius: f64 },

    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("no interior nodes to solve for")]
    EmptyInterior,

    #[error("iteration did not converge after {iterations} steps (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("pole {pole:?} is closer than {min_dist} to the boundary")]
    PoleTooClose { pole: [f64; 2], min_dist: f64 },

    #[error("degenerate arc: length {length} below {min_length}")]
    DegenerateArc { length: f64, min_length: f64 },

    #[error("H vanishes numerically at r = {r}")]
    VanishingHeight { r: f64 },

    #[error("inadmissible configuration: {0}")]
    Inadmissible(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("expression error: {0}")]
    Expression(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
