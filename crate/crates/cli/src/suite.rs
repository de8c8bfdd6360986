//! Benchmark grid: correctness, simulated cost and wall-clock rows.

use parascan_core::compare::max_rel_err;
use parascan_core::gen::{gen_model, simulate_data};
use parascan_core::kalman_par::{Devices, Method};
use parascan_core::kalman_seq::{GaussianStats, Lgssm};
use parascan_core::matcore::{Scalar, Vector};
use parascan_core::scan::{PoolBackend, ScanAlgorithm, SerialBackend};
use parascan_core::simhw::{replay_time, SimConfig, UnitCosts};

use crate::config::{BenchConfig, Precision};
use crate::error::BenchError;
use crate::rows::{Metric, ResultRow};
use crate::timing::{time_run, Clock};

/// Which groups of metrics to produce per cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parts {
    pub accuracy: bool,
    pub simulated: bool,
    pub wall: bool,
}

impl Parts {
    pub const ALL: Parts = Parts { accuracy: true, simulated: true, wall: true };
    pub const ACCURACY: Parts = Parts { accuracy: true, simulated: false, wall: false };
    pub const SIMULATED: Parts = Parts { accuracy: false, simulated: true, wall: false };
}

/// Model and measurements for the longest length; shorter lengths are prefixes.
struct Workload {
    model: Lgssm<f64>,
    ys: Vec<Vector<f64>>,
}

impl Workload {
    fn new(cfg: &BenchConfig) -> Result<Self, BenchError> {
        let t_max = cfg.lengths().last().copied().unwrap_or(1);
        let model = gen_model(cfg.seed, cfg.nx, cfg.ny, t_max)?;
        let ys = simulate_data(&model, cfg.seed);
        Ok(Workload { model, ys })
    }

    fn prefix(&self, t: usize) -> Result<(Lgssm<f64>, &[Vector<f64>]), BenchError> {
        Ok((self.model.truncated(t)?, &self.ys[..t]))
    }
}

struct Pools {
    a: PoolBackend,
    b: Option<PoolBackend>,
}

impl Pools {
    fn new(cfg: &BenchConfig) -> Result<Self, BenchError> {
        let a = PoolBackend::new(cfg.threads)?;
        let b = if cfg.devices == 2 { Some(PoolBackend::new(cfg.threads)?) } else { None };
        Ok(Pools { a, b })
    }

    fn devices(&self) -> Devices<'_> {
        match &self.b {
            Some(b) => Devices::Two(&self.a, b),
            None => Devices::One(&self.a),
        }
    }
}

fn cast_run<S: Scalar>(
    method: Method,
    alg: ScanAlgorithm,
    model: &Lgssm<f64>,
    ys: &[Vector<f64>],
    devices: Devices<'_>,
) -> Result<Vec<GaussianStats<S>>, BenchError> {
    let model = model.cast::<S>();
    let ys: Vec<Vector<S>> = ys.iter().map(|y| y.cast()).collect();
    Ok(method.run(&model, &ys, alg, devices)?)
}

/// Relative error of `method` at `precision` against the 64-bit sequential oracle.
pub fn accuracy(
    method: Method,
    alg: ScanAlgorithm,
    precision: Precision,
    model: &Lgssm<f64>,
    ys: &[Vector<f64>],
    devices: Devices<'_>,
) -> Result<f64, BenchError> {
    let oracle = method.oracle().run(model, ys, ScanAlgorithm::Sequential, Devices::One(&SerialBackend))?;
    Ok(match precision {
        Precision::F64 => max_rel_err(&cast_run::<f64>(method, alg, model, ys, devices)?, &oracle),
        Precision::F32 => max_rel_err(&cast_run::<f32>(method, alg, model, ys, devices)?, &oracle),
    })
}

fn time_method(
    cfg: &BenchConfig,
    method: Method,
    alg: ScanAlgorithm,
    model: &Lgssm<f64>,
    ys: &[Vector<f64>],
    devices: Devices<'_>,
    clock: &dyn Clock,
) -> Result<f64, BenchError> {
    fn go<S: Scalar>(
        cfg: &BenchConfig,
        method: Method,
        alg: ScanAlgorithm,
        model: &Lgssm<f64>,
        ys: &[Vector<f64>],
        devices: Devices<'_>,
        clock: &dyn Clock,
    ) -> Result<f64, BenchError> {
        let model = model.cast::<S>();
        let ys: Vec<Vector<S>> = ys.iter().map(|y| y.cast()).collect();
        let mut failure = None;
        let secs = time_run(
            &mut || {
                if let Err(e) = method.run(&model, &ys, alg, devices) {
                    failure.get_or_insert(e);
                }
            },
            cfg.runs,
            cfg.warmup,
            clock,
        )?;
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(secs),
        }
    }
    match cfg.precision {
        Precision::F32 => go::<f32>(cfg, method, alg, model, ys, devices, clock),
        Precision::F64 => go::<f64>(cfg, method, alg, model, ys, devices, clock),
    }
}

/// Rows for every cell of the grid, ordered by method, algorithm, length, metric.
pub fn run_suite(cfg: &BenchConfig, parts: Parts, clock: &dyn Clock) -> Result<Vec<ResultRow>, BenchError> {
    cfg.validate()?;
    let cells = cfg.cells();
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let work = if parts.accuracy || parts.wall { Some(Workload::new(cfg)?) } else { None };
    let pools = Pools::new(cfg)?;
    let costs = if parts.simulated { Some(UnitCosts::measure(cfg.nx, cfg.ny)?) } else { None };
    let sim = SimConfig::new(cfg.sim_threads, cfg.devices)?;
    let mut rows = Vec::new();
    for (method, alg) in cells {
        let devices = if method == Method::Ptfs { cfg.devices } else { 1 };
        for t in cfg.lengths() {
            let row = |metric: Metric, value: f64, threads: usize| ResultRow {
                method: method.name().into(),
                alg: alg.name().into(),
                t,
                precision: cfg.precision.name().into(),
                metric,
                value,
                seed: cfg.seed,
                threads,
                devices,
            };
            let data = work.as_ref().map(|w| w.prefix(t)).transpose()?;
            if let (true, Some((model, ys))) = (parts.wall, &data) {
                let secs = time_method(cfg, method, alg, model, ys, pools.devices(), clock)?;
                rows.push(row(Metric::WallMedianS, secs, cfg.threads));
            }
            if let Some(costs) = &costs {
                let r = replay_time(method, alg, t, costs, sim)?;
                let p = if method.is_parallel() { cfg.sim_threads } else { 1 };
                rows.push(row(Metric::TimeUnits, r.time_units as f64, p));
                rows.push(row(Metric::WorkUnits, r.work_units as f64, p));
                rows.push(row(Metric::SpanLaunches, r.span_launches as f64, p));
            }
            if let (true, Some((model, ys))) = (parts.accuracy, &data) {
                let err = accuracy(method, alg, cfg.precision, model, ys, pools.devices())?;
                rows.push(row(Metric::MaxRelErr, err, cfg.threads));
            }
        }
    }
    Ok(rows)
}

/// Sequential filter against the parallel filter (in-place Ladner–Fischer)
/// on the pooled backend, plus the simulated ratio of sequential work to
/// parallel time.
pub fn speedup_rows(cfg: &BenchConfig, clock: &dyn Clock) -> Result<Vec<ResultRow>, BenchError> {
    cfg.validate()?;
    let work = Workload::new(cfg)?;
    let pool = PoolBackend::new(cfg.threads)?;
    let costs = UnitCosts::measure(cfg.nx, cfg.ny)?;
    let alg = ScanAlgorithm::InplaceLaFi;
    let mut rows = Vec::new();
    for t in cfg.lengths() {
        let (model, ys) = work.prefix(t)?;
        let row = |metric: Metric, value: f64, threads: usize| ResultRow {
            method: Method::Pkf.name().into(),
            alg: alg.name().into(),
            t,
            precision: cfg.precision.name().into(),
            metric,
            value,
            seed: cfg.seed,
            threads,
            devices: 1,
        };
        let seq = time_method(cfg, Method::SeqKf, ScanAlgorithm::Sequential, &model, ys, Devices::One(&SerialBackend), clock)?;
        let par = time_method(cfg, Method::Pkf, alg, &model, ys, Devices::One(&pool), clock)?;
        rows.push(row(Metric::Speedup, seq / par, cfg.threads));
        rows.push(row(Metric::SimSpeedup, simulated_speedup(&costs, t, cfg.sim_threads)?, cfg.sim_threads));
    }
    Ok(rows)
}

/// Sequential filter work over parallel filter time on `threads` simulated threads.
pub fn simulated_speedup(costs: &UnitCosts, t: usize, threads: usize) -> Result<f64, BenchError> {
    let seq = costs.sequential_work(Method::SeqKf, t).expect("sequential method") as f64;
    let par = replay_time(Method::Pkf, ScanAlgorithm::InplaceLaFi, t, costs, SimConfig::new(threads, 1)?)?;
    Ok(seq / par.time_units as f64)
}

/// Accuracy rows above their precision's tolerance (or not finite).
pub fn gate_failures(rows: &[ResultRow]) -> Vec<&ResultRow> {
    rows.iter()
        .filter(|r| r.metric == Metric::MaxRelErr)
        .filter(|r| {
            let tol = r.precision.parse::<Precision>().map_or(0.0, |p| p.tolerance());
            r.value.is_nan() || r.value > tol
        })
        .collect()
}
