use thiserror::Error;

use crate::report::HistoryEntry;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    SpecMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("infeasible boundary data: {0}")]
    InfeasibleBoundary(String),

    /// The outer iteration produced non-finite iterates or the inner solver
    /// kept increasing its objective. The history up to the failure is kept
    /// for diagnostics.
    #[error("solver diverged at iteration {iteration}: {reason}")]
    Diverged {
        iteration: usize,
        reason: String,
        history: Vec<HistoryEntry>,
    },

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),

    #[error("problem `{0}` has no reference solution")]
    NoReference(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv parse error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
