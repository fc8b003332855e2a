//! Error taxonomy shared by every module.
//!
//! Three broad classes map onto the CLI exit codes: validation failures
//! (bad configuration documents, exit 1), contract violations (callers
//! breaking a documented precondition, exit 2) and capacity limits
//! (problem sizes beyond what dense enumeration supports, exit 2).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// One or more violations found while validating a configuration
    /// document. Each entry names the offending document path.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// A documented precondition was broken by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested problem size exceeds a configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A field or index is outside its layout bound.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// A sub-MDP solve did not converge within its sweep budget.
    #[error("sub-MDP {sub_id} did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    SubSolveDiverged {
        sub_id: usize,
        sweeps: usize,
        residual: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn bounds(msg: impl Into<String>) -> Self {
        Error::Bounds(msg.into())
    }

    /// Process exit code for the CLI: 1 for validation failures, 2 for
    /// contract/capacity/bounds and everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
