//! Error type shared by every module in the crate.

use thiserror::Error;

/// All failure modes of chain construction and analysis.
///
/// Validation and argument errors are recoverable caller mistakes; the
/// `SingularSystem` and `CapExceeded` variants signal numerically degenerate
/// input that a valid irreducible chain cannot produce.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is negative beyond tolerance")]
    NegativeEntry { row: usize, col: usize },

    #[error("row {row} sums to {sum} which is not 1 within tolerance")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("matrix must be at least 2x2, got n = {n}")]
    TooSmall { n: usize },

    #[error("row {row} has {len} entries, expected {n} (matrix must be square)")]
    NotSquare { row: usize, len: usize, n: usize },

    #[error("entry ({row}, {col}) is not a finite number")]
    NotFinite { row: usize, col: usize },

    #[error("state {state} out of range for an {n}-state chain")]
    StateOutOfRange { state: usize, n: usize },

    #[error("chain is not irreducible; communicating classes: {classes:?}")]
    NotIrreducible { classes: Vec<Vec<usize>> },

    #[error("chain is periodic with period {period}; power iteration needs aperiodicity")]
    NotAperiodic { period: usize },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("hitting-time simulation requires distinct start and target states")]
    SameState,

    #[error("trajectory exceeded the {cap}-step cap without reaching the target")]
    CapExceeded { cap: u64 },

    #[error("row {row} has only {available} probability mass to move; step {h} is infeasible")]
    InfeasibleStep { row: usize, available: f64, h: f64 },

    #[error("perturbation amount for row {row} is negative or exceeds the donor entry")]
    InfeasibleAmount { row: usize },

    #[error("matrices violate the monotone-perturbation conditions in {count} entries; first at ({row}, {col})")]
    ConditionsViolated { count: usize, row: usize, col: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("entry floor {min_entry} is infeasible for n = {n} (must satisfy 0 <= floor < 1/n)")]
    InfeasibleFloor { min_entry: f64, n: usize },

    #[error("invalid argument: {0}")]
    BadParameter(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
