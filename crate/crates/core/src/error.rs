use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GmolError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate transform at node {node}: gap R - r = {gap} below margin {margin}")]
    DegenerateTransform { node: usize, gap: f64, margin: f64 },

    #[error("line {line} fixed point did not converge after {iterations} iterations (last change {change:e})")]
    LineNotConverged {
        line: usize,
        iterations: usize,
        change: f64,
    },

    #[error("reference relaxation did not converge after {iterations} sweeps (residual {residual:e})")]
    RelaxationNotConverged { iterations: usize, residual: f64 },

    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
}

pub type Result<T> = std::result::Result<T, GmolError>;
