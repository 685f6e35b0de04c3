//! Data-parallel helpers that fall back to serial loops when the `parallel`
//! feature is off (e.g. in the browser build).
//!
//! Every helper writes each output element from a pure function of its
//! index, so results never depend on the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fills `out` in rows of `row_len`, calling `f(row_index, row)`.
pub fn for_each_row<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));
}

/// Fills `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

/// Runs `f(i, chunk)` over consecutive chunks of `stride` elements.
pub fn for_each_chunk<T, F>(out: &mut [T], stride: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(stride)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(stride).enumerate().for_each(|(i, c)| f(i, c));
}

/// Sum of `f(i)` for `i in 0..n`.
///
/// With `deterministic` set the sum is accumulated serially in index order,
/// which makes it bit-identical across thread counts.
pub fn sum<F>(n: usize, deterministic: bool, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !deterministic {
        return (0..n).into_par_iter().map(f).sum();
    }
    let _ = deterministic;
    (0..n).map(f).sum()
}

/// Runs `f` inside a dedicated thread pool of `threads` workers
/// (`0` = the global pool).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// Calls `f(i)` for `i in 0..n`, in parallel when enabled.
pub fn for_each_index<F>(n: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    (0..n).into_par_iter().for_each(f);
    #[cfg(not(feature = "parallel"))]
    (0..n).for_each(f);
}
