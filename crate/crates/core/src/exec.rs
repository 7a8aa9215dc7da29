//! Batch execution helpers.
//!
//! Per-record work in this crate (validation, chunking, flagging, index
//! scans) is pure, so batches can run data-parallel. With the default
//! `parallel` feature the helpers fan out over rayon; without it they
//! degrade to plain iteration. Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Size the global worker pool (`0` keeps the logical-core default).
/// No-op without the `parallel` feature or once a pool exists.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn map_batch<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map_batch`], kept unconditionally for benchmark
/// comparisons and for callers that need single-threaded execution.
pub fn map_batch_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map over an index range, in parallel when enabled. Used where the work
/// is driven by positions rather than a materialized slice.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
