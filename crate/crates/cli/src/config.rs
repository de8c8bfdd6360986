//! Benchmark configuration.

use std::fmt;
use std::str::FromStr;

use parascan_core::kalman_par::Method;
use parascan_core::scan::{ScanAlgorithm, DEFAULT_SENGUPTA_N};

use crate::error::BenchError;

/// Simulated threads per device, matching a large GPU.
pub const DEFAULT_SIM_THREADS: usize = 15_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(&self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    /// Largest accepted relative error against the 64-bit sequential oracle.
    pub fn tolerance(&self) -> f64 {
        match self {
            Precision::F32 => 1e-2,
            Precision::F64 => 1e-5,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(BenchError::Usage(format!("unknown precision `{other}` (expected f32 or f64)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub t_grid: Vec<usize>,
    pub methods: Vec<Method>,
    pub algs: Vec<ScanAlgorithm>,
    pub precision: Precision,
    pub runs: usize,
    pub warmup: usize,
    /// Workers per pooled device.
    pub threads: usize,
    pub devices: usize,
    pub sengupta_n: usize,
    /// Simulated threads per device.
    pub sim_threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            nx: 4,
            ny: 2,
            t_grid: vec![1024],
            methods: vec![Method::Pkf, Method::Prts, Method::Ptfs],
            algs: ScanAlgorithm::parallel(DEFAULT_SENGUPTA_N).to_vec(),
            precision: Precision::F32,
            runs: 12,
            warmup: 2,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            devices: 1,
            sengupta_n: DEFAULT_SENGUPTA_N,
            sim_threads: DEFAULT_SIM_THREADS,
        }
    }
}

fn alg_rank(alg: &ScanAlgorithm) -> usize {
    match alg {
        ScanAlgorithm::Sequential => 0,
        ScanAlgorithm::HillisSteele => 1,
        ScanAlgorithm::Blelloch => 2,
        ScanAlgorithm::InplaceLaFi => 3,
        ScanAlgorithm::SenguptaA => 4,
        ScanAlgorithm::SenguptaB(_) => 5,
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let usage = |m: String| Err(BenchError::Usage(m));
        if self.nx == 0 || self.ny == 0 {
            return usage("--nx and --ny must be positive".into());
        }
        if self.t_grid.is_empty() || self.t_grid.contains(&0) {
            return usage("--T needs at least one positive length".into());
        }
        if self.runs <= self.warmup {
            return usage(format!("--runs ({}) must exceed --warmup ({})", self.runs, self.warmup));
        }
        if self.threads == 0 || self.sim_threads == 0 {
            return usage("thread counts must be positive".into());
        }
        if !(1..=2).contains(&self.devices) {
            return usage(format!("--devices must be 1 or 2, got {}", self.devices));
        }
        for alg in &self.algs {
            alg.validate()?;
        }
        Ok(())
    }

    /// Method/algorithm pairs to run, ordered by method then algorithm.
    /// Parallel methods pair with parallel algorithms, sequential methods
    /// with `sequential` only.
    pub fn cells(&self) -> Vec<(Method, ScanAlgorithm)> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        let mut algs = self.algs.clone();
        algs.sort_by_key(alg_rank);
        algs.dedup();
        let mut cells = Vec::new();
        for &m in &methods {
            for &a in &algs {
                if m.is_parallel() != (a == ScanAlgorithm::Sequential) {
                    cells.push((m, a));
                }
            }
        }
        cells
    }

    /// Sorted, de-duplicated lengths.
    pub fn lengths(&self) -> Vec<usize> {
        let mut t = self.t_grid.clone();
        t.sort_unstable();
        t.dedup();
        t
    }
}
