use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input.
    #[error("validation error: {0}")]
    Validation(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at a point where the formula is singular.
    #[error("singular point: {0}")]
    Singular(String),

    /// Non-finite values or a failed numerical procedure.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no sign change on [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    /// The rate sits on a capacity threshold where the coding theorems are silent.
    #[error("rate {rate} is within 1e-12 of threshold {threshold}")]
    IndeterminateRate { rate: f64, threshold: f64 },

    #[error("search space {requested:e} exceeds budget {budget:e}")]
    ResourceLimit { requested: f64, budget: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular(_) | Error::Numerical(_) | Error::Bracketing { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
