use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("degenerate exponent: {0}")]
    DegenerateExponent(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("indefinite operator: nonpositive curvature encountered at iteration {0}")]
    IndefiniteOperator(usize),

    #[error("incompatible right-hand side: mean {mean:.3e} exceeds tolerance for a singular solve")]
    IncompatibleRhs { mean: f64 },

    #[error("step rejected at t={t:.6e}: CFL number {cfl:.3} on face {face} exceeds {cfl_max}")]
    StepRejected {
        t: f64,
        face: usize,
        cfl: f64,
        cfl_max: f64,
    },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("config error: {0}")]
    ConfigMsg(String),

    #[error("not comparable: {0}")]
    NotComparable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
