use dac_core::{AssetError, Assignment, ProbError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown market {0}")]
    UnknownMarket(u64),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("user {0:?} already exists")]
    DuplicateUser(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Market(#[from] ProbError),
    #[error(transparent)]
    Assets(#[from] AssetError),
    #[error("trade rejected: assets would fall {deficit} points below zero")]
    Rejected {
        worst_state: Assignment,
        deficit: f64,
    },
    #[error("admin token required")]
    Unauthorized,
    #[error("corrupt ledger at record {sequence}: {reason}")]
    CorruptLedger { sequence: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
