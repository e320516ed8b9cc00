//! Probabilistic generalized vehicle routing.
//!
//! Customers are grouped into clusters. Each cluster is present with its own
//! probability, and a present cluster needs exactly one of its nodes visited.
//! An a-priori solution fixes tours in advance. On a given day, absent nodes
//! are skipped by travelling directly to the next present one.
//!
//! The crate is `no_std` with `alloc`. Clocks, files and the command line live
//! in the `pgvrp` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod dantzig_wolfe;
pub mod deadline;
pub mod eval;
pub mod exact;
pub mod heuristics;
pub mod lshaped;
pub mod model;
pub mod oracle;
pub mod simplex;

pub use deadline::{Deadline, NoDeadline};
pub use model::{AprioriSolution, Cluster, Instance, Metric, ModelError, Point, Scenario};
