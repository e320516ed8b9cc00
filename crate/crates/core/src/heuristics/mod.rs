//! Construction heuristics.
//!
//! The three routing heuristics grow tours by expected insertion value.
//! Clarke-Wright savings and the sweep method are deterministic baselines
//! for the capacitated case.

mod insertion;
mod savings;
mod sweep;

pub use insertion::{
    default_capacity, expected_insertion_value, max_min_insertion, min_min_insertion, unbounded_insertion,
    InsertionCandidate, SlotTable,
};
pub use savings::clarke_wright;
pub use sweep::sweep;

use crate::eval::EvalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeuristicError {
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("{vehicles} vehicles with capacity {capacity} cannot cover {clusters} clusters")]
    InsufficientCapacity { capacity: usize, vehicles: usize, clusters: usize },
    #[error("slot {slot} is invalid for a tour of {len} positions")]
    InvalidSlot { slot: usize, len: usize },
    #[error("node {0} or its cluster is already on the tour")]
    AlreadyRouted(usize),
    #[error("node {0} is out of range")]
    NodeOutOfRange(usize),
    #[error("instance has no coordinates")]
    MissingCoordinates,
    #[error("demand vector has {found} entries, expected {expected}")]
    DemandLength { expected: usize, found: usize },
    #[error("demand of node {0} exceeds the vehicle capacity")]
    DemandExceedsCapacity(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
