//! Forward and reverse all-prefix-sums over associative operators.
//!
//! Scans run in place on an [`ElementStore`] whose length must be a power of
//! two; use [`next_pow2`] and [`fill_identity`] (or [`pad_to_pow2`]) first.

mod algorithms;
pub mod backend;
pub mod ops;
pub mod store;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

pub use backend::{strided, ExecBackend, Kernel, PoolBackend, SerialBackend};
pub use ops::{AddOp, AssocOp, CountingOp, Flip, MatMulOp, UnitOp};
pub use store::{ElementStore, SoaElement, SoaStore, SyncCells, UnitStore, Window};

use crate::error::{Error, Result};

/// Default reduction threshold for [`ScanAlgorithm::SenguptaB`].
pub const DEFAULT_SENGUPTA_N: usize = 15_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScanAlgorithm {
    Sequential,
    HillisSteele,
    Blelloch,
    InplaceLaFi,
    /// Reduce all the way down to one element.
    SenguptaA,
    /// Reduce until a level holds at most `N` elements, then Hillis–Steele.
    SenguptaB(usize),
}

impl ScanAlgorithm {
    /// The five parallel algorithms, with `sengupta_n` for the B variant.
    pub fn parallel(sengupta_n: usize) -> [ScanAlgorithm; 5] {
        use ScanAlgorithm::*;
        [HillisSteele, Blelloch, InplaceLaFi, SenguptaA, SenguptaB(sengupta_n)]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanAlgorithm::Sequential => "sequential",
            ScanAlgorithm::HillisSteele => "hillis-steele",
            ScanAlgorithm::Blelloch => "blelloch",
            ScanAlgorithm::InplaceLaFi => "inplace-lafi",
            ScanAlgorithm::SenguptaA => "sengupta-a",
            ScanAlgorithm::SenguptaB(_) => "sengupta-b",
        }
    }

    /// Parses a name from [`ScanAlgorithm::name`].
    pub fn parse(name: &str, sengupta_n: usize) -> Result<Self> {
        let alg = match name.trim().to_ascii_lowercase().as_str() {
            "sequential" => ScanAlgorithm::Sequential,
            "hillis-steele" => ScanAlgorithm::HillisSteele,
            "blelloch" => ScanAlgorithm::Blelloch,
            "inplace-lafi" => ScanAlgorithm::InplaceLaFi,
            "sengupta-a" => ScanAlgorithm::SenguptaA,
            "sengupta-b" => ScanAlgorithm::SenguptaB(sengupta_n),
            other => return Err(Error::InvalidConfig(format!("unknown scan algorithm `{other}`"))),
        };
        alg.validate()?;
        Ok(alg)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScanAlgorithm::SenguptaB(n) if *n < 2 => {
                Err(Error::InvalidConfig(format!("sengupta-b threshold must be at least 2, got {n}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ScanAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScanAlgorithm::parse(s, DEFAULT_SENGUPTA_N)
    }
}

/// Smallest power of two that is at least `t` (and at least 1).
pub fn next_pow2(t: usize) -> usize {
    t.max(1).next_power_of_two()
}

/// Writes the neutral element into slots `from..store.len()` in one launch.
pub fn fill_identity<X, O, B>(store: &X, from: usize, op: &O, backend: &B)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let n = store.len().saturating_sub(from);
    backend.launch(n, &|index, stride| {
        let e = op.identity();
        for i in strided(index, stride, n) {
            unsafe { store.store(from + i, &e) };
        }
    });
}

/// Appends neutral elements up to the next power of two.
pub fn pad_to_pow2<O: AssocOp>(op: &O, mut elems: Vec<O::Elem>) -> Vec<O::Elem> {
    let target = next_pow2(elems.len());
    elems.extend(std::iter::repeat_with(|| op.identity()).take(target - elems.len()));
    elems
}

fn check_len(t: usize) -> Result<()> {
    if t == 0 || !t.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(t));
    }
    Ok(())
}

fn dispatch<X, O, B>(alg: ScanAlgorithm, store: &X, op: &O, backend: &B) -> Result<()>
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    alg.validate()?;
    check_len(store.len())?;
    if store.len() == 1 {
        return Ok(());
    }
    match alg {
        ScanAlgorithm::Sequential => algorithms::sequential(store, op, backend),
        ScanAlgorithm::HillisSteele => algorithms::hillis_steele(store, op, backend, None),
        ScanAlgorithm::Blelloch => algorithms::blelloch(store, op, backend),
        ScanAlgorithm::InplaceLaFi => algorithms::inplace_lafi(store, op, backend),
        ScanAlgorithm::SenguptaA => algorithms::sengupta(store, op, backend, 1),
        ScanAlgorithm::SenguptaB(n) => algorithms::sengupta(store, op, backend, n),
    }
    Ok(())
}

/// In place, slot `k` becomes `a_0 ⊗ … ⊗ a_k`.
pub fn scan_forward<X, O, B>(alg: ScanAlgorithm, store: &X, op: &O, backend: &B) -> Result<()>
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    dispatch(alg, store, op, backend)
}

/// In place, slot `k` becomes `a_k ⊗ … ⊗ a_{T−1}`. Runs the forward kernels
/// over a reversed index view with the operands swapped.
pub fn scan_reverse<X, O, B>(alg: ScanAlgorithm, store: &X, op: &O, backend: &B) -> Result<()>
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    dispatch(alg, &Window::reversed(store), &Flip(op), backend)
}

/// Left fold on the calling thread; the reference every other algorithm is
/// checked against. Works for any length.
pub fn scan_sequential<O: AssocOp>(op: &O, elems: &mut [O::Elem]) {
    let mut scratch = op.new_scratch();
    let mut out = op.new_elem();
    for k in 1..elems.len() {
        op.combine(&elems[k - 1], &elems[k], &mut out, &mut scratch);
        std::mem::swap(&mut elems[k], &mut out);
    }
}

/// Scans a vector of any length: pads, scans, truncates.
pub fn scan_vec<O, B>(alg: ScanAlgorithm, reverse: bool, op: &O, backend: &B, elems: Vec<O::Elem>) -> Result<Vec<O::Elem>>
where
    O: AssocOp,
    O::Elem: SoaElement + Clone,
    B: ExecBackend + ?Sized,
{
    let t = elems.len();
    if t == 0 {
        return Ok(elems);
    }
    let proto = elems[0].clone();
    let mut store = SoaStore::from_elems(&pad_to_pow2(op, elems));
    if reverse {
        scan_reverse(alg, &store, op, backend)?;
    } else {
        scan_forward(alg, &store, op, backend)?;
    }
    let mut out = store.to_vec(&proto);
    out.truncate(t);
    Ok(out)
}

/// Operator applications and the number of launches containing at least one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkSpan {
    pub work: u64,
    pub span_levels: u64,
    pub launches: u64,
}

/// Serial backend that tallies launches and which of them applied the operator.
struct SpanCounter<'a, O> {
    op: &'a CountingOp<O>,
    launches: AtomicU64,
    span: AtomicU64,
}

impl<O: AssocOp> ExecBackend for SpanCounter<'_, O> {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        if n == 0 {
            return;
        }
        let before = self.op.count();
        SerialBackend.launch(n, kernel);
        self.launches.fetch_add(1, Ordering::Relaxed);
        if self.op.count() > before {
            self.span.fetch_add(1, Ordering::Relaxed);
        }
    }

    fn workers(&self) -> usize {
        1
    }
}

/// Counts work and span of a forward scan of length `t` by running it on
/// payload-free elements.
pub fn count_work_and_span(alg: ScanAlgorithm, t: usize) -> Result<WorkSpan> {
    let store = UnitStore::unit(t);
    let op = CountingOp::new(UnitOp);
    let backend = SpanCounter { op: &op, launches: AtomicU64::new(0), span: AtomicU64::new(0) };
    scan_forward(alg, &store, &op, &backend)?;
    Ok(WorkSpan {
        work: op.count(),
        span_levels: backend.span.into_inner(),
        launches: backend.launches.into_inner(),
    })
}

#[cfg(test)]
mod tests;
