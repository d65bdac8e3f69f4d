//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by geometry, solvers, simulation and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector shapes do not line up.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A scalar or configuration value is out of its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A retraction hit a (near-)zero column; the caller must shrink the step.
    #[error("degenerate retraction: column {column} maps to a near-zero vector")]
    DegenerateRetraction { column: usize },

    /// Armijo backtracking exhausted its budget without sufficient decrease.
    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailure { backtracks: usize },

    /// Config-file parse or validation failure.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// A solver tag not known to the harness.
    #[error("unknown solver tag `{0}`")]
    UnknownSolver(String),

    /// A CSV file does not carry the columns an operation expects.
    #[error("csv schema mismatch: expected columns [{expected}], found [{found}]")]
    Schema { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 config, 2 I/O, 3 numerical/internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownSolver(_)
            | Error::Schema { .. } => 1,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}
