use rayon::prelude::*;

use crate::error::{Result, SimError};

/// Evaluate `f` at every point on at most `jobs` threads. Results come back
/// in input order whatever the completion order.
pub fn run_sweep<P, T, F>(points: &[P], jobs: usize, f: F) -> Result<Vec<Result<T>>>
where
    P: Sync,
    T: Send,
    F: Fn(&P) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Search(format!("thread pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(&f).collect()))
}

/// Scientific notation with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    format!("{x:.11e}")
}
