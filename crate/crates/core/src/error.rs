//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("covariate row {row} contains a non-finite value")]
    NonFiniteCovariate { row: usize },

    #[error("pool has fewer than two units")]
    PoolTooSmall,

    #[error("pool is degenerate: maximum pairwise distance is zero")]
    DegeneratePool,

    #[error("selected set of group {group} is empty; covering radius undefined")]
    EmptySelection { group: u8 },

    #[error("line {line}: {msg}")]
    CsvFormat { line: u64, msg: String },

    #[error("line {line}: treatment value {value:?} is not 0 or 1")]
    BadTreatment { line: u64, value: String },

    #[error("outcome columns y1 and y0 must both be present or both absent")]
    MixedOutcomes,

    #[error("{what} = {got} exceeds the exhaustive-search limit {limit}")]
    OracleGuard {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("estimator head for group {group} has no labeled examples")]
    EmptyHead { group: u8 },

    #[error("evaluation pool lacks ground-truth outcomes")]
    MissingOutcomes,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
