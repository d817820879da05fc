//! Execution of independent per-span work items.
//!
//! The core only ships a sequential executor; the companion crate provides
//! a work-stealing one. Executors must return results in index order so that
//! every downstream merge is independent of scheduling.

use alloc::vec::Vec;

pub trait SpanExecutor: Sync {
    /// Evaluates `f(0..n)` and returns the results in index order.
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every work item on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl SpanExecutor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
