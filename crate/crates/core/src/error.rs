use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unsupported order {0}: BDF order must be in 1..=5")]
    UnsupportedOrder(usize),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("insufficient history: need {needed} levels, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("indefinite operator: shifted symbol {value} at mode {mode} is not positive")]
    IndefiniteOperator { mode: usize, value: f64 },

    #[error("problem `{problem}` requires a {expected} grid")]
    WrongBasis {
        problem: &'static str,
        expected: &'static str,
    },

    #[error("no exact solution attached to problem `{0}`")]
    MissingExactSolution(String),

    #[error("divergence detected at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}
