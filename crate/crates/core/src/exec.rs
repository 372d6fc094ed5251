//! Node-wise and sweep-wise execution helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run sequentially. Results are always collected in index order, and no
//! floating-point reduction happens in parallel, so outputs are bit-identical
//! either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items a node loop stays on the calling thread.
pub const MIN_PARALLEL_LEN: usize = 2048;

pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= MIN_PARALLEL_LEN {
            return (0..n).into_par_iter().with_min_len(512).map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Maps over coarse-grained work items (sweep points, ladder entries).
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if items.len() > 1 {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
