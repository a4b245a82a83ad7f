//! Data-parallel execution with a sequential fallback.
//!
//! Every embarrassingly parallel loop in the crate (risk-table cells, Monte
//! Carlo trials, leave-one-out re-solves, simulation steps) goes through
//! [`Execution::map`]. With the `parallel` feature disabled, or with
//! [`Execution::Sequential`] selected, the same closure runs in index order on
//! the calling thread. Results are always returned in index order, so output
//! never depends on the schedule.

use serde::{Deserialize, Serialize};

/// How to run an indexed batch of independent jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon work stealing on the current pool. Falls back to sequential
    /// when the crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `true` when this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and collects the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }
}

/// Runs `f` inside a thread pool with `jobs` workers (parallel builds only).
///
/// `jobs == 0` means "use the global pool".
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let f = |i: usize| (i * i) as u64 % 17;
        let seq = Execution::Sequential.map(1000, f);
        let par = Execution::Parallel.map(1000, f);
        assert_eq!(seq, par);
        assert_eq!(seq[5], 25 % 17);
    }

    #[test]
    fn empty_batch() {
        let out: Vec<u8> = Execution::default().map(0, |_| 1);
        assert!(out.is_empty());
    }
}
