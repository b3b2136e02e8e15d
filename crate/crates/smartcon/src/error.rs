//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("MCS level {0} outside 0..=12")]
    InvalidMcs(i64),

    #[error("repetition count {0} not in the {1} repetition set")]
    InvalidRepetition(u32, &'static str),

    #[error("PRB count {0} outside 1..={1}")]
    InvalidPrb(u32, u32),

    #[error("play index must be >= 1")]
    ZeroPlayIndex,

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("checkpoint version mismatch: expected `{expected}`, found `{found}`")]
    CheckpointVersion { expected: String, found: String },

    #[error("checkpoint dimension mismatch: {0}")]
    CheckpointDim(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no samples")]
    EmptySamples,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Cli(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
