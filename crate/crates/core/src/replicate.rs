//! Order-preserving parallel replication.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluate `f(0..count)` on `workers` threads (all cores when `None`),
/// returning results in index order.
pub fn run_indexed<T, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let work = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        Some(w) if w >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?
            .install(work),
        Some(_) => Err(Error::Argument("worker count must be >= 1".into())),
        None => work(),
    }
}
