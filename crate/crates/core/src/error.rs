use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("decrypted block is not a canonical scalar")]
    NonCanonicalScalar,
    #[error("malformed encoding: {0}")]
    Decode(&'static str),
    #[error("duplicate index {0}")]
    DuplicateIndex(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("signing key for round {round} is unavailable (current round {current})")]
    KeyUnavailable { round: u32, current: u32 },
    #[error("insufficient shares: need {needed}, have {have}")]
    InsufficientShares { needed: usize, have: usize },
    #[error("{op} called in stage {stage}")]
    WrongStage { op: &'static str, stage: &'static str },
    #[error("protocol failure: qualified dealer set is empty")]
    QualEmpty,
    #[error("protocol failure: DDN retrieval failed for finalized sender {sender}")]
    RetrievalFailed { sender: u32 },
    #[error("op_return of {0} bytes exceeds 80")]
    OversizedOpReturn(usize),
    #[error("ledger rejected transaction: {0}")]
    Ledger(LedgerFault),
    #[error("chain verification failed at epoch {epoch}: {fault}")]
    Chain { epoch: u32, fault: ChainFault },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerFault {
    InputSpent,
    UnknownInput,
    InvalidSignature,
}

impl fmt::Display for LedgerFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LedgerFault::InputSpent => "input already consumed",
            LedgerFault::UnknownInput => "unknown input",
            LedgerFault::InvalidSignature => "invalid signature",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFault {
    MissingGenesis,
    Malformed,
    InvalidSignature,
    Fork,
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainFault::MissingGenesis => "genesis transaction not found",
            ChainFault::Malformed => "malformed transaction",
            ChainFault::InvalidSignature => "invalid signature",
            ChainFault::Fork => "conflicting spends of one output",
        })
    }
}
