//! Order-preserving indexed maps over slices, with optional data
//! parallelism.
//!
//! With the `parallel` feature (default) the `map_indexed` family fans out
//! across a rayon pool; without it the same functions run sequentially.
//! The `_seq` variants always run sequentially so benchmarks can compare
//! both paths in one binary. Outputs are index-ordered in every mode, and
//! the fallible variants report the lowest-index error, so parallel and
//! sequential runs are observably identical.

use crate::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f(i, &items[i])` over the slice, preserving index order.
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(items, f)
    }
}

/// Sequential twin of [`map_indexed`]; always single-threaded.
pub fn map_indexed_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Fallible [`map_indexed`]. On failure returns the error with the lowest
/// index, matching what the sequential run would surface first.
pub fn try_map_indexed<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<Result<U>> =
            items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        try_map_indexed_seq(items, f)
    }
}

/// Sequential twin of [`try_map_indexed`]; stops at the first error.
pub fn try_map_indexed_seq<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    F: Fn(usize, &T) -> Result<U>,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}
