use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or configuration constraint is violated; the message names it.
    #[error("{0}")]
    InvalidParameter(String),

    #[error("cumulant evaluated at its pole r = {0}")]
    Pole(f64),

    #[error("root solver did not converge on ({lo}, {hi}): last residual {residual:e}")]
    Convergence { lo: f64, hi: f64, residual: f64 },

    #[error("argument {x} outside support [{lo}, {hi}]")]
    OutOfSupport { x: f64, lo: f64, hi: f64 },

    #[error("integral over an infinite range diverges (rate {rate})")]
    Divergent { rate: f64 },

    #[error("coinciding exponential rates {0} cannot be represented in closed form")]
    DegenerateRate(f64),

    #[error("singular linear system (determinant {det:e})")]
    Singular { det: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("boundary condition residual {residual:e} exceeds tolerance")]
    BoundaryResidual { residual: f64 },
}
