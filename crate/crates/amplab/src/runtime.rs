//! Worker pool, executor and wall clock for the std side.

use std::time::Instant;

use amplab_core::amp::Clock;
use amplab_core::exec::Executor;
use anyhow::{Context, Result};
use rayon::prelude::*;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "AMPLAB_THREADS";

/// A rayon pool. Results always come back in job order, so reductions do
/// not depend on the thread count.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            b = b.num_threads(t.max(1));
        }
        Ok(Self {
            pool: b.build().context("building the worker pool")?,
        })
    }

    /// Pool sized by `AMPLAB_THREADS` when set, else by rayon's default.
    pub fn from_env() -> Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?),
            Err(_) => None,
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `job(0..count)` on the pool, returning outputs in index order.
    pub fn map<T: Send>(&self, count: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
        self.pool.install(|| (0..count).into_par_iter().map(&job).collect())
    }

    /// Fallible variant of [`Pool::map`]; the first error in index order wins.
    pub fn try_map<T: Send>(&self, count: usize, job: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
        self.map(count, job).into_iter().collect()
    }
}

impl Executor for Pool {
    fn run(&self, count: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        self.map(count, job)
    }
}

/// Seconds since construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
