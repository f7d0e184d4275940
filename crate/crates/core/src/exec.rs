//! Execution strategy for the data-parallel loops (sample reductions, sign
//! enumeration, Monte Carlo trials, width sweeps).
//!
//! Every helper here splits work into index-ordered pieces and combines the
//! partial results in index order, so the sequential and parallel paths return
//! bit-identical values.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise behaves
    /// exactly like [`Strategy::Sequential`].
    #[default]
    Parallel,
}

impl Strategy {
    /// True when this strategy will actually fan out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }
}

/// Caps the global worker pool. Returns `false` if the pool was already built
/// or the crate was compiled without the `parallel` feature.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Evaluates `f(i)` for `i in 0..n`, preserving order.
pub fn map_indexed<T, F>(strategy: Strategy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = strategy;
    (0..n).map(f).collect()
}

/// Maps every element of `items`, preserving order.
pub fn map_slice<T, U, F>(strategy: Strategy, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = strategy;
    items.iter().map(f).collect()
}

/// Splits `0..n` into consecutive chunks of `chunk` indices.
pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}

/// Sums `f(range)` over fixed chunks of `0..n`. The chunk partials are added
/// left to right, so the result does not depend on the strategy.
pub fn chunked_sum<F>(strategy: Strategy, n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk);
    let partials = map_slice(strategy, &ranges, |r| f(r.clone()));
    partials.into_iter().sum()
}

/// Like [`chunked_sum`] but accumulates a fixed number of independent sums.
pub fn chunked_sums<const K: usize, F>(strategy: Strategy, n: usize, chunk: usize, f: F) -> [f64; K]
where
    F: Fn(Range<usize>) -> [f64; K] + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk);
    let partials = map_slice(strategy, &ranges, |r| f(r.clone()));
    let mut acc = [0.0; K];
    for p in partials {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}
