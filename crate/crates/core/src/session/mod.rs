//! Process state machine, provenance ledger and project persistence.

mod ledger;
mod project;
mod state;
mod store;

pub use ledger::*;
pub use project::*;
pub use state::*;
pub use store::*;

use crate::analysis::AnalysisError;
use crate::evaluation::EvaluationError;
use crate::gateway::GatewayError;
use crate::synthesis::{CheckError, SynthesisError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("transition {from} -> {to} is not allowed")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("gate not satisfied: {0}")]
    GateUnsatisfied(String),
    #[error("ledger sequence violation: expected seq {expected}, got {got}")]
    SequenceViolation { expected: u64, got: u64 },
    #[error("ledger line {line}: {reason}")]
    LedgerCorrupt { line: usize, reason: String },
    #[error("project is locked by another writer ({0})")]
    Locked(String),
    #[error("{0} already holds files")]
    AlreadyExists(String),
    #[error("{0} is not a project directory")]
    NotAProject(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    CorruptFile { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("rebuild mismatch: {0}")]
    RebuildMismatch(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}
