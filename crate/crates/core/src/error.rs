//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension {got} too small, need at least {min}")]
    DimensionTooSmall { min: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator {index} is not orthogonal (residual {residual:.3e})")]
    GeneratorNotOrthogonal { index: usize, residual: f64 },

    #[error("matrix is not orthogonal (residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },

    #[error("closure exceeded the cap of {cap} elements; the generated group is too large or infinite")]
    ClosureExceedsCap { cap: usize },

    #[error("element index {index} out of range for a group of order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("coorbit rank {rank} out of range [1, {order}]")]
    RankOutOfRange { rank: usize, order: usize },

    #[error("window {index} has zero norm")]
    ZeroWindow { index: usize },

    #[error("selection list {window} holds an invalid rank {rank}")]
    InvalidSelectionRank { window: usize, rank: usize },

    #[error("selection list {window} is empty")]
    EmptySelection { window: usize },

    #[error("selection has {got} lists but the bank has {expected} windows")]
    SelectionShapeMismatch { expected: usize, got: usize },

    #[error("duplicate point id {id:?}")]
    DuplicatePointId { id: String },

    #[error("dataset has not been closed under the group action")]
    NotInvariantDataset,

    #[error("dataset holds fewer than two distinct orbits")]
    FewerThanTwoOrbits,

    #[error("group is trivial (a single element)")]
    TrivialGroup,

    #[error("entries per rich window {n} out of range [2, {max}]")]
    EntriesOutOfRange { n: usize, max: usize },

    #[error("window count {p} out of range [{min}, {max}]")]
    WindowCountOutOfRange { p: usize, min: usize, max: usize },

    #[error("inconsistent embedding config: {reason}")]
    ConfigInconsistent { reason: String },
}
