//! Order-preserving batch map. Runs on the rayon pool when the `rayon`
//! feature is enabled and sequentially otherwise; results are identical
//! either way.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "rayon")]
    {
        items.par_iter().enumerate().map(|(k, t)| f(k, t)).collect()
    }
    #[cfg(not(feature = "rayon"))]
    {
        items.iter().enumerate().map(|(k, t)| f(k, t)).collect()
    }
}

pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "rayon")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "rayon"))]
    {
        (0..n).map(f).collect()
    }
}

/// True when batch operations run on the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "rayon")
}
