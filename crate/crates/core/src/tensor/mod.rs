//! Gridded tensor fields with symmetry-aware canonical storage.

mod field;
mod layout;
mod symmetry;

use thiserror::Error;

pub use field::{ScalarField, TensorField, TensorShape};
pub use layout::{component_count, flatten, iterate, iterate_with, slot_index, GroupLayout};
pub use symmetry::{MultiIndex, SymmetrySpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("inequality ({pos1},{pos2}) must satisfy pos1 < pos2")]
    InvalidInequality { pos1: usize, pos2: usize },
    #[error("duplicate inequality ({pos1},{pos2})")]
    DuplicateInequality { pos1: usize, pos2: usize },
    #[error("symmetry position {position} out of range for rank {rank}")]
    PositionOutOfRange { position: usize, rank: usize },
    #[error("index value {value} at slot {position} out of range for dimension {dim}")]
    IndexOutOfRange { position: usize, value: usize, dim: usize },
    #[error("expected {expected} indices, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension {dim} with rank {rank} is too large")]
    TooLarge { dim: usize, rank: usize },
    #[error("expected {expected} component arrays, found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("component array has {found} points, expected {expected}")]
    GridsizeMismatch { expected: usize, found: usize },
}
