//! Cooperative interruption for long-running solvers.

/// Polled by iterative solvers; returning `true` asks them to stop early.
pub trait Deadline {
    fn expired(&self) -> bool;
}

/// A deadline that never expires.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDeadline;

impl Deadline for NoDeadline {
    fn expired(&self) -> bool {
        false
    }
}

impl<F: Fn() -> bool> Deadline for F {
    fn expired(&self) -> bool {
        self()
    }
}
