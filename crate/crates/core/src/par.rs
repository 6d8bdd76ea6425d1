//! Data-parallel execution helpers.
//!
//! With the default `parallel` feature the helpers fan work out over the
//! rayon thread pool; without it they degrade to plain sequential loops so
//! the crate builds on targets where threads are unwelcome. Output order
//! always matches input order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items` and collects the results in input order.
#[cfg(feature = "parallel")]
pub fn map_collect<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Maps `f` over `items` and collects the results in input order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    items.into_iter().map(f).collect()
}

/// Caps the global worker pool at `n` threads.
///
/// Must run before any parallel work; the pool can only be sized once per
/// process, so a second call reports an error. Without the `parallel`
/// feature this is a no-op.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::Invalid(format!("thread pool already initialized: {e}")))
}

/// Caps the global worker pool at `n` threads.
///
/// Must run before any parallel work; the pool can only be sized once per
/// process, so a second call reports an error. Without the `parallel`
/// feature this is a no-op.
#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> crate::Result<()> {
    Ok(())
}
