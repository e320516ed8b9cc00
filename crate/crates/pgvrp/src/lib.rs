//! File formats, experiment suite and command-line front end for the
//! `pgvrp-core` solvers.

pub mod bench;
pub mod format;

pub use pgvrp_core as core;
