//! Batch execution of independent jobs.
//!
//! Simulations share nothing, so a batch is a plain map. With the `parallel`
//! feature the map fans out over rayon's pool; otherwise it runs in order.
//! Both return results in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn seq_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    seq_map(items, f)
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
