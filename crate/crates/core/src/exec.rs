//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the loops run on the rayon pool unless
//! [`set_parallel`] switched them off; without the feature they always run on
//! the calling thread. Every helper produces bit-identical results in both
//! modes: element updates are independent and reductions use a fixed chunking
//! summed in order.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed reduction block. Changing it changes rounding, not correctness.
pub const REDUCE_CHUNK: usize = 4096;

/// Minimum work items before a loop is split across threads.
#[cfg(feature = "parallel")]
const MIN_PAR_LEN: usize = 256;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Switch data-parallel execution on or off at runtime.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Apply `f(index, item)` to every element.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() >= MIN_PAR_LEN {
        items
            .par_iter_mut()
            .with_min_len(64)
            .enumerate()
            .for_each(|(i, t)| f(i, t));
        return;
    }
    items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
}

/// Collect `f(0..n)` into a vector.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && n >= MIN_PAR_LEN {
        return (0..n).into_par_iter().with_min_len(64).map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = |c: usize| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    if is_parallel() && chunks > 1 {
        let parts: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
        return parts.into_iter().sum();
    }
    (0..chunks).map(partial).sum()
}
