//! Deadline abstraction.
//!
//! The expensive stages (star-world construction, path integration, the
//! tracking solver) accept a budget so a caller with real-time constraints
//! can cut them short at their documented fallback points. The core crate
//! has no clock; a `std` host passes a wall-clock implementation, tests pass
//! [`Unlimited`] so results stay deterministic.

/// Cooperative deadline checked between coarse units of work.
pub trait Budget {
    /// True once the budget is exhausted. Must be monotone: once this
    /// returns true it keeps returning true.
    fn exhausted(&self) -> bool;
}

/// Budget that never expires.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    #[inline]
    fn exhausted(&self) -> bool {
        false
    }
}

/// Budget that is exhausted from the start; forces every budgeted stage
/// onto its fallback path. Useful in tests and for disabling a stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct Spent;

impl Budget for Spent {
    #[inline]
    fn exhausted(&self) -> bool {
        true
    }
}

impl<B: Budget + ?Sized> Budget for &B {
    #[inline]
    fn exhausted(&self) -> bool {
        (**self).exhausted()
    }
}
