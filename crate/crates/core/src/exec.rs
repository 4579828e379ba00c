//! Pluggable execution of independent work items.
//!
//! Encoder minibatches and grid-search configurations are embarrassingly
//! parallel. The core crate only ships [`Sequential`]; the `voxboost` crate
//! provides a scoped-thread executor. Results always come back in index
//! order, so reductions over them are bit-identical regardless of schedule.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluate `f(0), f(1), .., f(n - 1)` and return the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}
