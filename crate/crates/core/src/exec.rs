//! Ordered map over cells or edges, parallel when enabled.
//!
//! Results are always returned in index order, so anything reduced from
//! them sequentially is bit-identical whichever mode ran.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::Result;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Switches between the rayon and the plain iterator path. Returns the
/// previous setting. Without the `parallel` feature this is a no-op.
pub fn set_parallel(on: bool) -> bool {
    PARALLEL.swap(on && cfg!(feature = "parallel"), Ordering::SeqCst)
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::SeqCst)
}

pub fn map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
