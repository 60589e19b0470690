//! Worker pool for trials and instances. Output order never depends on the
//! number of workers.

use isingrbm_core::bench::{Executor, TrialRows};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable consulted when `--jobs` is absent.
pub const JOBS_ENV: &str = "ISINGRBM_JOBS";

pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {jobs} workers: {e}")))?;
        Ok(Self { pool })
    }

    pub fn jobs(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Maps `f` over `items` in parallel, keeping input order.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

impl Executor for Pool {
    fn map_trials(
        &self,
        n: u64,
        f: &(dyn Fn(u64) -> isingrbm_core::Result<TrialRows> + Sync),
    ) -> Vec<isingrbm_core::Result<TrialRows>> {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Worker count from the flag, else the environment, else the machine.
pub fn resolve_jobs(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(JOBS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
