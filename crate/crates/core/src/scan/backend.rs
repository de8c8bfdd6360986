//! Execution backends for stride-loop kernels.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A kernel receives `(index, stride)` and must process iterations
/// `index, index + stride, …` below its own iteration count.
pub type Kernel<'a> = dyn Fn(usize, usize) + Sync + 'a;

/// Runs launches of stride-loop kernels with a full barrier between launches.
pub trait ExecBackend: Sync {
    /// Runs `kernel` over `n` iterations and returns once all have finished.
    fn launch(&self, n: usize, kernel: &Kernel<'_>);

    /// Number of workers the backend distributes iterations over.
    fn workers(&self) -> usize;

    /// Marks a phase boundary between launches. Instrumenting backends use it
    /// to split their launch log; the default does nothing.
    fn mark(&self, _label: &'static str) {}
}

/// Iterations owned by worker `index` out of `n`.
#[inline]
pub fn strided(index: usize, stride: usize, n: usize) -> std::iter::StepBy<std::ops::Range<usize>> {
    (index..n).step_by(stride)
}

/// Runs every launch on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct SerialBackend;

impl ExecBackend for SerialBackend {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        if n > 0 {
            kernel(0, 1);
        }
    }

    fn workers(&self) -> usize {
        1
    }
}

/// Fixed-size pool of worker threads.
pub struct PoolBackend {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl PoolBackend {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("parascan-{i}"))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(PoolBackend { pool, workers })
    }
}

impl std::fmt::Debug for PoolBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoolBackend").field("workers", &self.workers).finish()
    }
}

impl ExecBackend for PoolBackend {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        let w = self.workers.min(n);
        match w {
            0 => {}
            1 => kernel(0, 1),
            _ => self.pool.install(|| (0..w).into_par_iter().for_each(|i| kernel(i, w))),
        }
    }

    fn workers(&self) -> usize {
        self.workers
    }
}

impl<B: ExecBackend + ?Sized> ExecBackend for &B {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        (**self).launch(n, kernel)
    }

    fn workers(&self) -> usize {
        (**self).workers()
    }

    fn mark(&self, label: &'static str) {
        (**self).mark(label)
    }
}
