//! Scheduling of independent Monte-Carlo blocks.

use alloc::vec::Vec;

/// Runs independent jobs and returns their outputs in job order, so that any
/// reduction over them is independent of how the jobs were scheduled.
pub trait Executor: Sync {
    fn run(&self, count: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run(&self, count: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        (0..count).map(job).collect()
    }
}

/// Element-wise sum of block outputs, in block order.
pub fn reduce_sum(blocks: &[Vec<f64>]) -> Vec<f64> {
    let mut out = blocks.first().map(|b| alloc::vec![0.0; b.len()]).unwrap_or_default();
    for b in blocks {
        for (o, x) in out.iter_mut().zip(b) {
            *o += x;
        }
    }
    out
}
