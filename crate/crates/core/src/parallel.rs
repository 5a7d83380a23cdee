//! Thin shims over rayon so every hot loop has a sequential fallback.
//!
//! With the `parallel` feature the shims delegate to rayon; without it they
//! run plain sequential loops. All callers combine results in a canonical
//! order (index order or a stable sort), so outputs are bit-identical across
//! feature choice and thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
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

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
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

/// Stable sort; the result (including the relative order of equal keys) is
/// identical to the sequential sort for any thread count.
pub fn sort_by_key<T, K, F>(items: &mut [T], key: F)
where
    T: Send,
    K: Ord,
    F: Fn(&T) -> K + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_sort_by_key(key);
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.sort_by_key(key);
    }
}

/// Sums per-index summand vectors of equal length into one vector.
/// Accumulation runs sequentially in index order for determinism; only the
/// summand evaluation is parallel.
pub fn sum_vectors<F>(n_terms: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    let parts = map_indexed(n_terms, f);
    let mut out = vec![0.0; len];
    for part in &parts {
        debug_assert_eq!(part.len(), len);
        for (o, p) in out.iter_mut().zip(part) {
            *o += *p;
        }
    }
    out
}
