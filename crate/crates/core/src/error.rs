use thiserror::Error;

use crate::coalescence::DerivedProcess;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative rate {rate} from state {from} to state {to}")]
    NegativeRate { from: usize, to: usize, rate: f64 },

    #[error("chain is not irreducible: state {0} cannot reach every other state and back")]
    NotIrreducible(usize),

    #[error("chain is not reversible: detailed balance fails between {x} and {y} (relative error {relative_error:e})")]
    NotReversible { x: usize, y: usize, relative_error: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("product chain too large: {n} base states exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("inverse power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("process not finished within horizon {}", .0.horizon)]
    HorizonExceeded(Box<DerivedProcess>),

    #[error("horizon cap {cap} reached without observing the requested coalescence time")]
    HorizonCapExceeded { cap: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

/// Accepts a derivation that ran out of horizon, returning whatever was computed.
pub fn allow_partial(result: Result<DerivedProcess>) -> Result<DerivedProcess> {
    match result {
        Err(Error::HorizonExceeded(partial)) => Ok(*partial),
        other => other,
    }
}
