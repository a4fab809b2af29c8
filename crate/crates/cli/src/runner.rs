//! Parallel execution of independent seeded runs.

use rayon::prelude::*;

/// Seed of run `i`: the master seed xor the run index.
pub fn run_seed(master: u64, run: usize) -> u64 {
    master ^ run as u64
}

/// Calls `f` for runs `0..runs` on the worker pool. Results come back in run
/// order whatever the number of workers.
pub fn run_parallel<T, F>(runs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..runs).into_par_iter().map(f).collect()
}
