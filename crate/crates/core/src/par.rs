//! Order-preserving parallel map over trial indices.
//!
//! Every Monte-Carlo loop in the crate funnels through [`map_indices`]. Results come
//! back in index order, so downstream reductions are independent of scheduling.

/// Evaluates `f(i)` for `i in 0..count`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indices<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Evaluates `f(i)` for `i in 0..count`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indices<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Always-sequential variant, used by benches to compare against [`map_indices`].
pub fn map_indices_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Whether trial loops run on the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
