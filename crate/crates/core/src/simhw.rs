//! Simulated-PRAM backend: launches are executed one simulated thread at a
//! time and charged by flop count.
//!
//! A launch costs the largest flop tally of any simulated thread; a run costs
//! the sum over its launches. Memory traffic and copies are free.
//!
//! Two ways to get a [`SimReport`]:
//! - [`estimate_time`] runs the real method on flop-counting scalars.
//! - [`replay_time`] replays the same launch sequence on payload-free
//!   elements, charging per-element costs measured once by [`UnitCosts`].
//!   Every kernel is data-oblivious, so both agree exactly; replay scales to
//!   millions of steps.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::kalman_par::{
    ptfs_run, Devices, FilterBuilder, FilterElement, FilterOp, Method, SmootherBuilder, SmootherElement, SmootherOp,
};
use crate::kalman_seq::{tf_combine_into, GaussianStats, InfoStats, Lgssm, StepParams, TfScratch};
use crate::matcore::{charge, with_flop_counting, Flop, FlopTally, Mat, Vector};
use crate::scan::{
    next_pow2, scan_forward, scan_reverse, strided, AssocOp, ExecBackend, Kernel, ScanAlgorithm, UnitStore,
};

/// Simulated machine: `threads` per device, one or two devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    threads: usize,
    devices: usize,
}

impl SimConfig {
    pub fn new(threads: usize, devices: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidConfig("simulated thread count must be at least 1".into()));
        }
        if !(1..=2).contains(&devices) {
            return Err(Error::InvalidConfig(format!("device count must be 1 or 2, got {devices}")));
        }
        Ok(SimConfig { threads, devices })
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn devices(&self) -> usize {
        self.devices
    }
}

/// Cost of one launch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaunchRecord {
    pub iterations: usize,
    pub max_thread_flops: u64,
    pub total_flops: u64,
}

/// Runs `kernel` over `n` iterations on `p` simulated threads, one after the other.
pub fn simulate_launch(kernel: &Kernel<'_>, n: usize, p: usize) -> LaunchRecord {
    let w = p.max(1).min(n);
    let mut rec = LaunchRecord { iterations: n, max_thread_flops: 0, total_flops: 0 };
    for index in 0..w {
        let ((), tally) = with_flop_counting(|| kernel(index, w));
        rec.max_thread_flops = rec.max_thread_flops.max(tally.total());
        rec.total_flops += tally.total();
    }
    rec
}

/// Time, work and launch count of a simulated run.
///
/// On one device `time_units` is the sum of per-launch maxima and
/// `work_units` the sum of per-launch totals. Runs combined with
/// [`SimReport::concurrent`] overlap in time, so there the time is the
/// larger of the two parts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimReport {
    pub launches: Vec<LaunchRecord>,
    pub time_units: u64,
    pub work_units: u64,
    pub span_launches: u64,
}

impl SimReport {
    /// Report of launches run back to back on one device.
    pub fn from_launches(launches: Vec<LaunchRecord>) -> Self {
        SimReport {
            time_units: launches.iter().map(|l| l.max_thread_flops).sum(),
            work_units: launches.iter().map(|l| l.total_flops).sum(),
            span_launches: launches.len() as u64,
            launches,
        }
    }

    /// `self` and `other` on separate devices at the same time.
    pub fn concurrent(mut self, other: SimReport) -> Self {
        self.time_units = self.time_units.max(other.time_units);
        self.work_units += other.work_units;
        self.span_launches = self.span_launches.max(other.span_launches);
        self.launches.extend(other.launches);
        self
    }

    /// `other` after `self`.
    pub fn then(mut self, other: SimReport) -> Self {
        self.time_units += other.time_units;
        self.work_units += other.work_units;
        self.span_launches += other.span_launches;
        self.launches.extend(other.launches);
        self
    }
}

/// Backend that records a [`LaunchRecord`] per non-empty launch.
#[derive(Debug)]
pub struct SimBackend {
    threads: usize,
    log: Mutex<Vec<LaunchRecord>>,
    marks: Mutex<Vec<(&'static str, usize)>>,
}

impl SimBackend {
    pub fn new(threads: usize) -> Self {
        SimBackend { threads: threads.max(1), log: Mutex::new(Vec::new()), marks: Mutex::new(Vec::new()) }
    }

    pub fn launches(&self) -> Vec<LaunchRecord> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn report(&self) -> SimReport {
        SimReport::from_launches(self.launches())
    }

    /// Splits the log at the first mark named `label`; the second part is
    /// empty if there is no such mark.
    pub fn split_at(&self, label: &str) -> (SimReport, SimReport) {
        let mut log = self.launches();
        let at = self
            .marks
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(log.len(), |&(_, i)| i);
        let tail = log.split_off(at);
        (SimReport::from_launches(log), SimReport::from_launches(tail))
    }
}

impl ExecBackend for SimBackend {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        if n == 0 {
            return;
        }
        let rec = simulate_launch(kernel, n, self.threads);
        self.log.lock().unwrap_or_else(|p| p.into_inner()).push(rec);
    }

    fn workers(&self) -> usize {
        self.threads
    }

    fn mark(&self, label: &'static str) {
        let at = self.log.lock().unwrap_or_else(|p| p.into_inner()).len();
        self.marks.lock().unwrap_or_else(|p| p.into_inner()).push((label, at));
    }
}

/// Payload-free operator charging a fixed cost per application.
#[derive(Clone, Copy, Debug)]
pub struct CostOp(pub FlopTally);

impl AssocOp for CostOp {
    type Elem = ();
    type Scratch = ();

    fn new_elem(&self) {}
    fn new_scratch(&self) {}

    fn combine(&self, _: &(), _: &(), _: &mut (), _: &mut ()) {
        charge(self.0);
    }

    fn set_identity(&self, _: &mut ()) {}
}

fn cast_inputs(model: &Lgssm<f64>, ys: &[Vector<f64>]) -> (Lgssm<Flop>, Vec<Vector<Flop>>) {
    (model.cast(), ys.iter().map(|y| y.cast()).collect())
}

/// Runs `method` on flop-counting scalars over the simulated machine.
///
/// `PKF` and `PRTS` always use one device. Sequential methods run as a single
/// one-iteration launch.
pub fn estimate_time(
    method: Method,
    alg: ScanAlgorithm,
    model: &Lgssm<f64>,
    ys: &[Vector<f64>],
    cfg: SimConfig,
) -> Result<SimReport> {
    let (model, ys) = cast_inputs(model, ys);
    let dev = SimBackend::new(cfg.threads);
    if method == Method::Ptfs && cfg.devices == 2 {
        let bwd = SimBackend::new(cfg.threads);
        ptfs_run(&model, &ys, alg, Devices::Two(&dev, &bwd))?;
        let (pass, merge) = bwd.split_at("merge");
        return Ok(dev.report().concurrent(pass).then(merge));
    }
    if method.is_parallel() {
        method.run(&model, &ys, alg, Devices::One(&dev))?;
    } else {
        let result = Mutex::new(None);
        dev.launch(1, &|_, _| {
            *result.lock().unwrap_or_else(|p| p.into_inner()) = Some(method.run(&model, &ys, alg, Devices::One(&dev)));
        });
        result.into_inner().unwrap_or_else(|p| p.into_inner()).expect("launch ran")?;
    }
    Ok(dev.report())
}

/// Two-device two-filter smoother time.
pub fn estimate_time_two_device(
    alg: ScanAlgorithm,
    model: &Lgssm<f64>,
    ys: &[Vector<f64>],
    threads: usize,
) -> Result<SimReport> {
    estimate_time(Method::Ptfs, alg, model, ys, SimConfig::new(threads, 2)?)
}

/// Simulated scan of `t` payload-free elements with a fixed cost per `⊗`.
pub fn simulate_scan(alg: ScanAlgorithm, t: usize, cost: FlopTally, threads: usize) -> Result<SimReport> {
    let dev = SimBackend::new(threads);
    scan_forward(alg, &UnitStore::unit(t), &CostOp(cost), &dev)?;
    Ok(dev.report())
}

/// Flop cost of a sequential method as a function of the step count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeqCost {
    one: FlopTally,
    two: FlopTally,
    per_step: FlopTally,
}

impl SeqCost {
    pub fn at(&self, steps: usize) -> u64 {
        match steps {
            0 => 0,
            1 => self.one.total(),
            _ => self.two.total() + (steps as u64 - 2) * self.per_step.total(),
        }
    }
}

/// Flop costs of every per-element computation at fixed dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitCosts {
    pub nx: usize,
    pub ny: usize,
    pub filter_first: FlopTally,
    pub filter: FlopTally,
    pub filter_combine: FlopTally,
    pub smoother: FlopTally,
    pub smoother_combine: FlopTally,
    pub tf_combine: FlopTally,
    pub seq_kf: SeqCost,
    pub seq_rts: SeqCost,
    pub seq_tfs: SeqCost,
}

fn probe_model(nx: usize, ny: usize, steps: usize) -> Result<Lgssm<Flop>> {
    let params = StepParams {
        f: Mat::from_fn(nx, nx, |i, j| Flop(if i == j { 0.9 } else { 0.01 * (i + 2 * j) as f64 })),
        u: Vector::from_fn(nx, |i| Flop(0.1 * i as f64)),
        q: Mat::from_fn(nx, nx, |i, j| Flop(if i == j { 1.0 } else { 0.1 })),
        h: Mat::from_fn(ny, nx, |i, j| Flop(if i == j % ny { 1.0 } else { 0.2 })),
        d: Vector::from_fn(ny, |i| Flop(-0.1 * i as f64)),
        r: Mat::from_fn(ny, ny, |i, j| Flop(if i == j { 0.5 } else { 0.05 })),
    };
    Lgssm::constant(steps, params, Vector::zeros(nx), Mat::identity(nx))
}

fn probe_ys(nx: usize, ny: usize, steps: usize) -> Vec<Vector<Flop>> {
    let _ = nx;
    (0..steps).map(|k| Vector::from_fn(ny, |i| Flop(((k + i) as f64).sin()))).collect()
}

fn tally<R>(f: impl FnOnce() -> Result<R>) -> Result<FlopTally> {
    let (r, t) = with_flop_counting(f);
    r.map(|_| t)
}

impl UnitCosts {
    /// Measures every cost once on a small well-posed model.
    pub fn measure(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidConfig("state and measurement dimensions must be positive".into()));
        }
        let model = probe_model(nx, ny, 3)?;
        let ys = probe_ys(nx, ny, 3);

        let mut fb = FilterBuilder::new(nx, ny);
        let mut a0 = FilterElement::zeros(nx);
        let mut a1 = FilterElement::zeros(nx);
        let filter_first = tally(|| fb.build(&model, 0, &ys[0], &mut a0))?;
        let filter = tally(|| fb.build(&model, 1, &ys[1], &mut a1))?;
        let fop = FilterOp::new(nx);
        let mut out = fop.new_elem();
        let mut sc = fop.new_scratch();
        let filter_combine = tally(|| {
            fop.combine(&a0, &a1, &mut out, &mut sc);
            Ok(())
        })?;

        let filtered = GaussianStats::new(out.b.clone(), out.c.clone());
        let mut sb = SmootherBuilder::new(nx);
        let mut s0 = SmootherElement::zeros(nx);
        let smoother = tally(|| sb.build(&model, &filtered, 0, 3, &mut s0))?;
        let sop = SmootherOp::new(nx);
        let s1 = sop.identity();
        let mut sout = sop.new_elem();
        let mut ssc = sop.new_scratch();
        let smoother_combine = tally(|| {
            sop.combine(&s1, &s0, &mut sout, &mut ssc);
            Ok(())
        })?;

        let info = InfoStats { eta: a1.eta.clone(), jmat: a1.jmat.clone() };
        let mut g = GaussianStats::zeros(nx);
        let mut tsc = TfScratch::new(nx);
        let tf_combine = tally(|| tf_combine_into(&filtered, &info, &mut g, &mut tsc))?;

        let seq = |m: Method| -> Result<SeqCost> {
            let mut c = [FlopTally::ZERO; 3];
            for (k, slot) in c.iter_mut().enumerate() {
                let model = model.truncated(k + 1)?;
                *slot = tally(|| m.run(&model, &ys[..=k], ScanAlgorithm::Sequential, Devices::One(&crate::scan::SerialBackend)))?;
            }
            Ok(SeqCost { one: c[0], two: c[1], per_step: minus(c[2], c[1]) })
        };

        Ok(UnitCosts {
            nx,
            ny,
            filter_first,
            filter,
            filter_combine,
            smoother,
            smoother_combine,
            tf_combine,
            seq_kf: seq(Method::SeqKf)?,
            seq_rts: seq(Method::SeqRts)?,
            seq_tfs: seq(Method::SeqTfs)?,
        })
    }

    /// Flops of a sequential method over `steps` steps.
    pub fn sequential_work(&self, method: Method, steps: usize) -> Option<u64> {
        match method {
            Method::SeqKf => Some(self.seq_kf.at(steps)),
            Method::SeqRts => Some(self.seq_rts.at(steps)),
            Method::SeqTfs => Some(self.seq_tfs.at(steps)),
            _ => None,
        }
    }
}

fn minus(a: FlopTally, b: FlopTally) -> FlopTally {
    FlopTally { adds: a.adds - b.adds, muls: a.muls - b.muls, divs: a.divs - b.divs, sqrts: a.sqrts - b.sqrts }
}

/// A launch whose iteration `i` costs `cost(i)`.
fn replay_launch<B: ExecBackend + ?Sized>(dev: &B, n: usize, cost: impl Fn(usize) -> FlopTally + Sync) {
    dev.launch(n, &|index, stride| {
        for i in strided(index, stride, n) {
            charge(cost(i));
        }
    });
}

fn free(_: usize) -> FlopTally {
    FlopTally::ZERO
}

/// Filter elements for steps `shift..steps`, then neutral padding.
fn replay_filter_store<B: ExecBackend + ?Sized>(dev: &B, c: &UnitCosts, steps: usize, shift: usize) {
    replay_launch(dev, steps - shift, |p| if p + shift == 0 { c.filter_first } else { c.filter });
    replay_launch(dev, next_pow2(steps) - (steps - shift), free);
}

fn replay_pkf<B: ExecBackend + ?Sized>(dev: &B, alg: ScanAlgorithm, c: &UnitCosts, steps: usize) -> Result<()> {
    replay_filter_store(dev, c, steps, 0);
    scan_forward(alg, &UnitStore::unit(next_pow2(steps)), &CostOp(c.filter_combine), dev)?;
    replay_launch(dev, steps, free);
    Ok(())
}

/// Replays the launch sequence of `method` with costs `costs`; agrees with
/// [`estimate_time`] on every model with the same dimensions.
pub fn replay_time(
    method: Method,
    alg: ScanAlgorithm,
    steps: usize,
    costs: &UnitCosts,
    cfg: SimConfig,
) -> Result<SimReport> {
    if steps == 0 {
        return Err(Error::InvalidModel("a model needs at least one step".into()));
    }
    alg.validate()?;
    let c = costs;
    let pad = next_pow2(steps);
    let dev = SimBackend::new(cfg.threads);
    match method {
        Method::Pkf => replay_pkf(&dev, alg, c, steps)?,
        Method::Prts => {
            replay_pkf(&dev, alg, c, steps)?;
            replay_launch(&dev, steps, |t| if t + 1 == steps { FlopTally::ZERO } else { c.smoother });
            replay_launch(&dev, pad - steps, free);
            scan_reverse(alg, &UnitStore::unit(pad), &CostOp(c.smoother_combine), &dev)?;
            replay_launch(&dev, steps, free);
        }
        Method::Ptfs if cfg.devices == 1 => {
            replay_filter_store(&dev, c, steps, 0);
            replay_launch(&dev, steps - 1, free);
            replay_launch(&dev, pad - (steps - 1), free);
            scan_forward(alg, &UnitStore::unit(pad), &CostOp(c.filter_combine), &dev)?;
            scan_reverse(alg, &UnitStore::unit(pad), &CostOp(c.filter_combine), &dev)?;
            replay_launch(&dev, steps, free);
            replay_launch(&dev, steps, |_| c.tf_combine);
        }
        Method::Ptfs => {
            replay_pkf(&dev, alg, c, steps)?;
            let bwd = SimBackend::new(cfg.threads);
            replay_filter_store(&bwd, c, steps, 1);
            scan_reverse(alg, &UnitStore::unit(pad), &CostOp(c.filter_combine), &bwd)?;
            bwd.mark("merge");
            replay_launch(&bwd, steps, free);
            replay_launch(&bwd, steps, |_| c.tf_combine);
            let (pass, merge) = bwd.split_at("merge");
            return Ok(dev.report().concurrent(pass).then(merge));
        }
        seq => {
            let work = costs.sequential_work(seq, steps).expect("sequential method");
            dev.launch(1, &|_, _| charge(FlopTally::adds(work)));
        }
    }
    Ok(dev.report())
}
