use thiserror::Error;

/// Errors raised by tensor-train construction, I/O and the rounding algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TtError {
    #[error("empty core list")]
    EmptyCoreList,

    #[error("boundary rank must be 1, got r_0 = {left}, r_d = {right}")]
    BoundaryRankNotOne { left: usize, right: usize },

    #[error("rank chain mismatch between core {core} (r_right = {right}) and core {next} (r_left = {left})")]
    RankChainMismatch {
        core: usize,
        right: usize,
        next: usize,
        left: usize,
    },

    #[error("invalid rank chain: {0}")]
    InvalidRankChain(String),

    #[error("invalid core: {0}")]
    InvalidCore(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dense tensor would have {entries} entries, above the guard of {limit}")]
    DenseTooLarge { entries: u128, limit: usize },

    #[error("mode sizes do not match: {0}")]
    ModeSizeMismatch(String),

    #[error("empty term list")]
    EmptyTermList,

    #[error("invalid ranks: {0}")]
    InvalidRanks(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },

    #[error("tensor is not left-orthogonal: core {core} has ||V^T V - I||_F = {defect:e}")]
    NotLeftOrthogonal { core: usize, defect: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Arnoldi breakdown at iteration {0}")]
    Breakdown(usize),

    #[error("malformed TTF1 data: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TtError {
    fn from(err: std::io::Error) -> Self {
        TtError::Io(err.to_string())
    }
}

pub type TtResult<T> = Result<T, TtError>;
