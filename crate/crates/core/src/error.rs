use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Iterative transport solve stopped at `max_iter` without meeting the tolerance.
    #[error("transport solve did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("conjugate gradient stagnated after {iterations} iterations (residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("unusable geometry: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used by the CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::OutsideDomain { .. } => "outside-domain",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::NotConverged { .. } => "not-converged",
            Error::Stagnation { .. } => "cg-stagnation",
            Error::Geometry(_) => "geometry",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
