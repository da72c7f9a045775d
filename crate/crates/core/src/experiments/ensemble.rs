//! Deterministic parallel evaluation over an ensemble of paths.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::paths::{derive_seed, simulate_path, SamplePath, TimeGrid};

/// Seed of ensemble member `i`.
pub(crate) fn member_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, i as u64)
}

/// Path `i` of the ensemble.
pub(crate) fn member_path(master: u64, grid: TimeGrid, d: usize, i: usize) -> Result<SamplePath> {
    simulate_path(grid, d, member_seed(master, i))
}

/// Evaluates `f(0), …, f(count − 1)` on a pool of `threads` workers and
/// returns the results in index order.
pub(crate) fn map_members<T, F>(threads: Option<usize>, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}
