//! Execution layer for the data-parallel inner loops.
//!
//! Every reduction here has a fixed shape: the index range is cut into
//! [`CHUNK`]-sized blocks, each block is summed pairwise, and the block sums
//! are again summed pairwise. The tree depends only on the input length, so
//! sequential and parallel runs produce bit-identical results regardless of
//! the thread count.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Leaf block size of every reduction tree.
pub const CHUNK: usize = 1024;

/// How a loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    /// Uses the ambient rayon pool. Falls back to sequential execution when
    /// the crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// `f(0), f(1), ..., f(len - 1)` in index order.
pub fn map_indexed<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

/// `f` applied to every element of `items`, order preserved.
pub fn map_slice<S, T, F>(exec: Exec, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Pairwise sum with a length-determined tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Pairwise sum of complex values, real and imaginary parts on the same tree.
pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_sum_complex(lo) + pairwise_sum_complex(hi)
        }
    }
}

/// Deterministic `Σ f(i)` over `0..len`.
pub fn sum_indexed<F>(exec: Exec, len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let blocks = len.div_ceil(CHUNK);
    let block_sum = |b: usize| {
        let start = b * CHUNK;
        let end = (start + CHUNK).min(len);
        let leaf: Vec<Complex64> = (start..end).map(&f).collect();
        pairwise_sum_complex(&leaf)
    };
    let partial = map_indexed(exec, blocks, block_sum);
    pairwise_sum_complex(&partial)
}

/// Deterministic `Σ f(x)` over a slice.
pub fn sum_slice<S, F>(exec: Exec, items: &[S], f: F) -> Complex64
where
    S: Sync,
    F: Fn(&S) -> Complex64 + Sync + Send,
{
    sum_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Deterministic `Σ f(i)` for real-valued `f`.
pub fn sum_indexed_real<F>(exec: Exec, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = len.div_ceil(CHUNK);
    let block_sum = |b: usize| {
        let start = b * CHUNK;
        let end = (start + CHUNK).min(len);
        let leaf: Vec<f64> = (start..end).map(&f).collect();
        pairwise_sum(&leaf)
    };
    let partial = map_indexed(exec, blocks, block_sum);
    pairwise_sum(&partial)
}

/// `true` iff `pred` holds for every index.
pub fn all_indexed<F>(exec: Exec, len: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..len).into_par_iter().all(pred),
        _ => (0..len).all(pred),
    }
}
