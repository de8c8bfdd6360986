//! Parallel-in-time Kalman filter (PKF), RTS smoother (PRTS) and two-filter
//! smoother (PTFS) built on the scan module.
//!
//! Every driver is a fixed sequence of launches on an [`ExecBackend`]:
//! element construction, neutral padding, scan, extraction. The simulator
//! mirrors these sequences exactly, so keep the two in step.

mod elements;

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

pub use elements::{
    make_filter_element, make_smoother_element, FilterBuilder, FilterElement, FilterOp, FilterScratch,
    SmootherBuilder, SmootherElement, SmootherOp,
};

use crate::error::{Error, Result};
use crate::kalman_seq::{kf_run, rts_run, tf_combine_into, tfs_run, GaussianStats, InfoStats, Lgssm, TfScratch};
use crate::matcore::{Scalar, Vector};
use crate::scan::{
    fill_identity, next_pow2, scan_forward, scan_reverse, strided, AssocOp, ElementStore, ExecBackend, ScanAlgorithm,
    SoaStore,
};

/// First error by launch index; later ones are dropped.
struct ErrorSlot(Mutex<Option<(usize, Error)>>);

impl ErrorSlot {
    fn new() -> Self {
        ErrorSlot(Mutex::new(None))
    }

    fn record(&self, index: usize, r: Result<()>) {
        if let Err(e) = r {
            let mut g = self.0.lock().unwrap_or_else(|p| p.into_inner());
            if g.as_ref().is_none_or(|(i, _)| index < *i) {
                *g = Some((index, e));
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.0.into_inner().unwrap_or_else(|p| p.into_inner()) {
            Some((_, e)) => Err(e),
            None => Ok(()),
        }
    }
}

/// Execution resources for the two-filter smoother.
#[derive(Clone, Copy)]
pub enum Devices<'a> {
    /// Both scans run one after the other on one backend.
    One(&'a dyn ExecBackend),
    /// Forward filter on the first backend, backward filter and combination
    /// on the second, with the two scans running concurrently.
    Two(&'a dyn ExecBackend, &'a dyn ExecBackend),
}

impl Devices<'_> {
    pub fn count(&self) -> usize {
        match self {
            Devices::One(_) => 1,
            Devices::Two(..) => 2,
        }
    }
}

impl fmt::Debug for Devices<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Devices({})", self.count())
    }
}

/// Builds `store[p] = a_{p + shift}` for every available step, in one launch.
fn build_filter_elements<S, B>(
    model: &Lgssm<S>,
    ys: &[Vector<S>],
    store: &SoaStore<FilterElement<S>>,
    shift: usize,
    backend: &B,
) -> Result<()>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    let n = ys.len().saturating_sub(shift);
    let errors = ErrorSlot::new();
    backend.launch(n, &|index, stride| {
        let mut builder = FilterBuilder::new(model.nx(), model.ny());
        let mut elem = FilterElement::zeros(model.nx());
        for p in strided(index, stride, n) {
            let r = builder.build(model, p + shift, &ys[p + shift], &mut elem);
            unsafe { store.store(p, &elem) };
            errors.record(p, r);
        }
    });
    errors.finish()
}

/// Filter elements for all steps, padded with the neutral element.
fn filter_store<S, B>(model: &Lgssm<S>, ys: &[Vector<S>], shift: usize, backend: &B) -> Result<SoaStore<FilterElement<S>>>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    let nx = model.nx();
    let store = SoaStore::new(&FilterElement::zeros(nx), next_pow2(ys.len()));
    build_filter_elements(model, ys, &store, shift, backend)?;
    fill_identity(&store, ys.len() - shift, &FilterOp::<S>::new(nx), backend);
    Ok(store)
}

/// `(b, C)` of the first `steps` scanned filter elements.
fn extract_filtered<S, B>(store: &SoaStore<FilterElement<S>>, steps: usize, backend: &B) -> SoaStore<GaussianStats<S>>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    let nx = store.widths()[1];
    let out = SoaStore::new(&GaussianStats::zeros(nx), steps);
    backend.launch(steps, &|index, stride| {
        let mut e = FilterElement::zeros(nx);
        let mut g = GaussianStats::zeros(nx);
        for t in strided(index, stride, steps) {
            unsafe {
                store.load(t, &mut e);
                g.mean.copy_from(&e.b).expect("same size");
                g.cov.copy_from(&e.c).expect("same size");
                out.store(t, &g);
            }
        }
    });
    out
}

fn check_alg(alg: ScanAlgorithm) -> Result<()> {
    alg.validate()
}

fn pkf_store<S, B>(model: &Lgssm<S>, ys: &[Vector<S>], alg: ScanAlgorithm, backend: &B) -> Result<SoaStore<GaussianStats<S>>>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    model.check_measurements(ys)?;
    check_alg(alg)?;
    let store = filter_store(model, ys, 0, backend)?;
    scan_forward(alg, &store, &FilterOp::<S>::new(model.nx()), backend)?;
    Ok(extract_filtered(&store, ys.len(), backend))
}

/// Parallel Kalman filter: filtered mean and covariance for every step.
pub fn pkf_run<S, B>(model: &Lgssm<S>, ys: &[Vector<S>], alg: ScanAlgorithm, backend: &B) -> Result<Vec<GaussianStats<S>>>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    let mut out = pkf_store(model, ys, alg, backend)?;
    Ok(out.to_vec(&GaussianStats::zeros(model.nx())))
}

/// Parallel RTS smoother, including its own parallel filtering pass.
pub fn prts_run<S, B>(model: &Lgssm<S>, ys: &[Vector<S>], alg: ScanAlgorithm, backend: &B) -> Result<Vec<GaussianStats<S>>>
where
    S: Scalar,
    B: ExecBackend + ?Sized,
{
    let filtered = pkf_store(model, ys, alg, backend)?;
    let (nx, steps) = (model.nx(), ys.len());
    let store = SoaStore::new(&SmootherElement::zeros(nx), next_pow2(steps));
    let errors = ErrorSlot::new();
    backend.launch(steps, &|index, stride| {
        let mut builder = SmootherBuilder::new(nx);
        let mut f = GaussianStats::zeros(nx);
        let mut elem = SmootherElement::zeros(nx);
        for t in strided(index, stride, steps) {
            unsafe { filtered.load(t, &mut f) };
            let r = builder.build(model, &f, t, steps, &mut elem);
            unsafe { store.store(t, &elem) };
            errors.record(t, r);
        }
    });
    errors.finish()?;
    let op = SmootherOp::<S>::new(nx);
    fill_identity(&store, steps, &op, backend);
    scan_reverse(alg, &store, &op, backend)?;

    let out = SoaStore::new(&GaussianStats::zeros(nx), steps);
    backend.launch(steps, &|index, stride| {
        let mut e = SmootherElement::zeros(nx);
        let mut g = GaussianStats::zeros(nx);
        for t in strided(index, stride, steps) {
            unsafe {
                store.load(t, &mut e);
                g.mean.copy_from(&e.g).expect("same size");
                g.cov.copy_from(&e.l).expect("same size");
                out.store(t, &g);
            }
        }
    });
    let mut out = out;
    Ok(out.to_vec(&GaussianStats::zeros(nx)))
}

/// Output of the two-filter smoother with both intermediate passes.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFilterOutput<S: Scalar> {
    pub smoothed: Vec<GaussianStats<S>>,
    pub filtered: Vec<GaussianStats<S>>,
    /// Backward information `(η, J)` about each state from later measurements.
    pub backward: Vec<InfoStats<S>>,
}

/// Combination launch: `tf_combine(filtered[t], backward[t])`.
fn combine_two_filter<S, F, B>(
    filtered: &F,
    bwd: &SoaStore<FilterElement<S>>,
    steps: usize,
    backend: &B,
) -> Result<SoaStore<GaussianStats<S>>>
where
    S: Scalar,
    F: ElementStore<Elem = GaussianStats<S>> + ?Sized,
    B: ExecBackend + ?Sized,
{
    let nx = bwd.widths()[1];
    let out = SoaStore::new(&GaussianStats::zeros(nx), steps);
    let errors = ErrorSlot::new();
    backend.launch(steps, &|index, stride| {
        let mut sc = TfScratch::new(nx);
        let mut f = GaussianStats::zeros(nx);
        let mut e = FilterElement::zeros(nx);
        let mut info = InfoStats::zeros(nx);
        let mut g = GaussianStats::zeros(nx);
        for t in strided(index, stride, steps) {
            unsafe {
                filtered.load(t, &mut f);
                bwd.load(t, &mut e);
            }
            info.eta.copy_from(&e.eta).expect("same size");
            info.jmat.copy_from(&e.jmat).expect("same size");
            let r = tf_combine_into(&f, &info, &mut g, &mut sc);
            unsafe { out.store(t, &g) };
            errors.record(t, r);
        }
    });
    errors.finish()?;
    Ok(out)
}

/// Parallel two-filter smoother with its intermediate results.
pub fn ptfs_run_detailed<S: Scalar>(
    model: &Lgssm<S>,
    ys: &[Vector<S>],
    alg: ScanAlgorithm,
    devices: Devices<'_>,
) -> Result<TwoFilterOutput<S>> {
    model.check_measurements(ys)?;
    check_alg(alg)?;
    let (nx, steps) = (model.nx(), ys.len());
    let op = FilterOp::<S>::new(nx);

    let (fwd, mut bwd, mut filtered, mut smoothed) = match devices {
        Devices::One(backend) => {
            let fwd = filter_store(model, ys, 0, backend)?;
            // The backward series is (a_2, …, a_T, e): the same elements shifted by one.
            let bwd = SoaStore::new(&FilterElement::zeros(nx), fwd.len());
            let n = steps - 1;
            backend.launch(n, &|index, stride| {
                let mut e = FilterElement::zeros(nx);
                for p in strided(index, stride, n) {
                    unsafe {
                        fwd.load(p + 1, &mut e);
                        bwd.store(p, &e);
                    }
                }
            });
            fill_identity(&bwd, n, &op, backend);
            scan_forward(alg, &fwd, &op, backend)?;
            scan_reverse(alg, &bwd, &op, backend)?;
            let filtered = extract_filtered(&fwd, steps, backend);
            let smoothed = combine_two_filter(&filtered, &bwd, steps, backend)?;
            (fwd, bwd, filtered, smoothed)
        }
        Devices::Two(dev_f, dev_b) => {
            let (fwd, bwd) = std::thread::scope(|s| {
                let fwd = s.spawn(|| -> Result<_> {
                    let store = filter_store(model, ys, 0, dev_f)?;
                    scan_forward(alg, &store, &op, dev_f)?;
                    let filtered = extract_filtered(&store, steps, dev_f);
                    Ok((store, filtered))
                });
                let bwd = s.spawn(|| -> Result<_> {
                    let store = filter_store(model, ys, 1, dev_b)?;
                    scan_reverse(alg, &store, &op, dev_b)?;
                    Ok(store)
                });
                (join(fwd), join(bwd))
            });
            let (fwd, filtered_f) = fwd?;
            let bwd = bwd?;
            // Move the forward results to the combining device.
            dev_b.mark("merge");
            let filtered = SoaStore::new(&GaussianStats::zeros(nx), steps);
            dev_b.launch(steps, &|index, stride| {
                let mut g = GaussianStats::zeros(nx);
                for t in strided(index, stride, steps) {
                    unsafe {
                        filtered_f.load(t, &mut g);
                        filtered.store(t, &g);
                    }
                }
            });
            let smoothed = combine_two_filter(&filtered, &bwd, steps, dev_b)?;
            (fwd, bwd, filtered, smoothed)
        }
    };
    drop(fwd);
    let backward = bwd
        .to_vec(&FilterElement::zeros(nx))
        .into_iter()
        .take(steps)
        .map(|e| InfoStats { eta: e.eta, jmat: e.jmat })
        .collect();
    Ok(TwoFilterOutput {
        smoothed: smoothed.to_vec(&GaussianStats::zeros(nx)),
        filtered: filtered.to_vec(&GaussianStats::zeros(nx)),
        backward,
    })
}

fn join<T>(h: std::thread::ScopedJoinHandle<'_, T>) -> T {
    h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))
}

/// Parallel two-filter smoother: smoothed mean and covariance for every step.
pub fn ptfs_run<S: Scalar>(
    model: &Lgssm<S>,
    ys: &[Vector<S>],
    alg: ScanAlgorithm,
    devices: Devices<'_>,
) -> Result<Vec<GaussianStats<S>>> {
    Ok(ptfs_run_detailed(model, ys, alg, devices)?.smoothed)
}

/// Filtering and smoothing methods, parallel and sequential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pkf,
    Prts,
    Ptfs,
    SeqKf,
    SeqRts,
    SeqTfs,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Pkf, Method::Prts, Method::Ptfs, Method::SeqKf, Method::SeqRts, Method::SeqTfs];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pkf => "PKF",
            Method::Prts => "PRTS",
            Method::Ptfs => "PTFS",
            Method::SeqKf => "SEQ_KF",
            Method::SeqRts => "SEQ_RTS",
            Method::SeqTfs => "SEQ_TFS",
        }
    }

    pub fn is_parallel(&self) -> bool {
        matches!(self, Method::Pkf | Method::Prts | Method::Ptfs)
    }

    /// The sequential method computing the same quantity.
    pub fn oracle(&self) -> Method {
        match self {
            Method::Pkf | Method::SeqKf => Method::SeqKf,
            _ => Method::SeqRts,
        }
    }

    /// Runs the method. Sequential methods ignore `alg` and `devices`;
    /// `Pkf` and `Prts` use the first backend of `devices`.
    pub fn run<S: Scalar>(
        &self,
        model: &Lgssm<S>,
        ys: &[Vector<S>],
        alg: ScanAlgorithm,
        devices: Devices<'_>,
    ) -> Result<Vec<GaussianStats<S>>> {
        let first = match devices {
            Devices::One(b) | Devices::Two(b, _) => b,
        };
        match self {
            Method::Pkf => pkf_run(model, ys, alg, first),
            Method::Prts => prts_run(model, ys, alg, first),
            Method::Ptfs => ptfs_run(model, ys, alg, devices),
            Method::SeqKf => kf_run(model, ys),
            Method::SeqRts => rts_run(model, &kf_run(model, ys)?),
            Method::SeqTfs => tfs_run(model, ys),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == up)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{}`", s.trim())))
    }
}

/// Neutral element check used by tests and diagnostics.
pub fn filter_identity<S: Scalar>(nx: usize) -> FilterElement<S> {
    FilterOp::<S>::new(nx).identity()
}

/// Neutral element of the smoothing operator.
pub fn smoother_identity<S: Scalar>(nx: usize) -> SmootherElement<S> {
    SmootherOp::<S>::new(nx).identity()
}

#[cfg(test)]
mod tests;
