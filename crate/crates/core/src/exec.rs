//! Injection point for parallel evaluation.
//!
//! Every batch in the crate is an indexed map whose results land at fixed
//! positions, so any executor that preserves indices produces identical
//! output regardless of scheduling.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Returns `[f(0), f(1), ..., f(len - 1)]`.
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Evaluates on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
