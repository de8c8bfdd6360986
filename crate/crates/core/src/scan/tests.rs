use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::AtomicUsize;
use std::sync::Mutex;

use super::algorithms::test_hooks::hillis_steele_partial;
use super::*;
use crate::matcore::Mat;

/// Contiguous index range `[lo, hi]`; concatenation only succeeds for
/// adjacent ranges, so any reordering of operands is detected.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Range {
    lo: i64,
    hi: i64,
    bad: i64,
}

impl Range {
    const EMPTY: Range = Range { lo: 1, hi: 0, bad: 0 };

    fn single(k: i64) -> Self {
        Range { lo: k, hi: k, bad: 0 }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

impl SoaElement for Range {
    type Word = i64;
    fn widths(&self) -> Vec<usize> {
        vec![3]
    }
    fn read_field(&mut self, _: usize, src: &[i64]) {
        *self = Range { lo: src[0], hi: src[1], bad: src[2] };
    }
    fn write_field(&self, _: usize, dst: &mut [i64]) {
        dst.copy_from_slice(&[self.lo, self.hi, self.bad]);
    }
}

struct ConcatOp;

impl AssocOp for ConcatOp {
    type Elem = Range;
    type Scratch = ();
    fn new_elem(&self) -> Range {
        Range::EMPTY
    }
    fn new_scratch(&self) {}
    fn combine(&self, l: &Range, r: &Range, out: &mut Range, _: &mut ()) {
        *out = if l.bad + r.bad > 0 {
            Range { bad: 1, ..*l }
        } else if l.is_empty() {
            *r
        } else if r.is_empty() {
            *l
        } else if r.lo == l.hi + 1 {
            Range { lo: l.lo, hi: r.hi, bad: 0 }
        } else {
            Range { bad: 1, ..*l }
        };
    }
    fn set_identity(&self, out: &mut Range) {
        *out = Range::EMPTY;
    }
}

fn all_algorithms() -> Vec<ScanAlgorithm> {
    let mut v = vec![ScanAlgorithm::Sequential];
    v.extend(ScanAlgorithm::parallel(4));
    v.push(ScanAlgorithm::SenguptaB(DEFAULT_SENGUPTA_N));
    v.push(ScanAlgorithm::SenguptaB(3));
    v
}

#[test]
fn cumulative_sums() {
    let input: Vec<i64> = (1..=8).collect();
    for alg in all_algorithms() {
        let out = scan_vec(alg, false, &AddOp, &SerialBackend, input.clone()).unwrap();
        assert_eq!(out, vec![1, 3, 6, 10, 15, 21, 28, 36], "{alg}");
    }
}

#[test]
fn all_ones_count_up() {
    for alg in all_algorithms() {
        let out = scan_vec(alg, false, &AddOp, &SerialBackend, vec![1; 16]).unwrap();
        assert_eq!(out, (1..=16).collect::<Vec<i64>>(), "{alg}");
    }
}

#[test]
fn single_element_untouched() {
    for alg in all_algorithms() {
        assert_eq!(scan_vec(alg, false, &AddOp, &SerialBackend, vec![42]).unwrap(), vec![42]);
        assert_eq!(scan_vec(alg, true, &AddOp, &SerialBackend, vec![42]).unwrap(), vec![42]);
    }
    let ws = count_work_and_span(ScanAlgorithm::Blelloch, 1).unwrap();
    assert_eq!(ws, WorkSpan { work: 0, span_levels: 0, launches: 0 });
}

#[test]
fn suffix_sums() {
    for alg in all_algorithms() {
        let out = scan_vec(alg, true, &AddOp, &SerialBackend, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(out, vec![10, 9, 7, 4], "{alg}");
    }
}

#[test]
fn padding() {
    assert_eq!(next_pow2(5), 8);
    assert_eq!(next_pow2(8), 8);
    assert_eq!(next_pow2(1), 1);
    assert_eq!(next_pow2(0), 1);
    let padded = pad_to_pow2(&AddOp, vec![1, 2, 3, 4, 5]);
    assert_eq!(padded, vec![1, 2, 3, 4, 5, 0, 0, 0]);
    assert_eq!(pad_to_pow2(&AddOp, (0..8).collect()).len(), 8);
    let out = scan_vec(ScanAlgorithm::Blelloch, false, &AddOp, &SerialBackend, vec![1, 2, 3]).unwrap();
    assert_eq!(out, vec![1, 3, 6]);
}

#[test]
fn rejects_non_power_of_two() {
    let store = SoaStore::from_elems(&[1i64, 2, 3]);
    for alg in all_algorithms() {
        assert_eq!(scan_forward(alg, &store, &AddOp, &SerialBackend), Err(Error::NotPowerOfTwo(3)));
    }
    assert!(ScanAlgorithm::SenguptaB(1).validate().is_err());
}

#[test]
fn names_round_trip() {
    for alg in ScanAlgorithm::parallel(DEFAULT_SENGUPTA_N) {
        assert_eq!(alg.name().parse::<ScanAlgorithm>().unwrap(), alg);
    }
    assert_eq!(ScanAlgorithm::parse("sengupta-b", 64).unwrap(), ScanAlgorithm::SenguptaB(64));
    assert!("kogge-stone".parse::<ScanAlgorithm>().is_err());
}

#[test]
fn ordering_preserved_for_noncommutative_operator() {
    for t in [2usize, 4, 16, 64] {
        let input: Vec<Range> = (0..t as i64).map(Range::single).collect();
        for alg in all_algorithms() {
            let fwd = scan_vec(alg, false, &ConcatOp, &SerialBackend, input.clone()).unwrap();
            let rev = scan_vec(alg, true, &ConcatOp, &SerialBackend, input.clone()).unwrap();
            for k in 0..t {
                assert_eq!(fwd[k], Range { lo: 0, hi: k as i64, bad: 0 }, "{alg} T={t} k={k}");
                assert_eq!(rev[k], Range { lo: k as i64, hi: t as i64 - 1, bad: 0 }, "{alg} T={t} k={k}");
            }
        }
    }
}

#[test]
fn hillis_steele_level_structure() {
    // After level d (0-based), slot k holds a_{max(0, k − 2^(d+1) + 1)} ⊗ … ⊗ a_k.
    let input: Vec<Range> = (0..16).map(Range::single).collect();
    for d in 0..4u32 {
        let mut store = SoaStore::from_elems(&input);
        hillis_steele_partial(&store, &ConcatOp, &SerialBackend, d + 1);
        let out = store.to_vec(&Range::EMPTY);
        for (k, r) in out.iter().enumerate() {
            let lo = (k as i64 - (1i64 << (d + 1)) + 1).max(0);
            assert_eq!(*r, Range { lo, hi: k as i64, bad: 0 }, "level {d} slot {k}");
        }
    }
}

#[test]
fn matrix_products_match_left_fold() {
    let op = MatMulOp::<f64>::new(2);
    let mats: Vec<Mat<f64>> = (0..4)
        .map(|k| Mat::from_fn(2, 2, |i, j| ((k * 7 + i * 3 + j * 5) % 11) as f64 - 5.0))
        .collect();
    let mut oracle = mats.clone();
    scan_sequential(&op, &mut oracle);
    let mut fold = mats[0].clone();
    assert_eq!(oracle[0], fold);
    for k in 1..4 {
        fold = crate::matcore::mat_mul(&fold, &mats[k]).unwrap();
        assert_eq!(oracle[k], fold);
    }
    for alg in all_algorithms() {
        let got = scan_vec(alg, false, &op, &SerialBackend, mats.clone()).unwrap();
        // Small integers: every algorithm is exact.
        assert_eq!(got, oracle, "{alg}");
    }
}

#[test]
fn work_closed_forms_at_16() {
    assert_eq!(count_work_and_span(ScanAlgorithm::HillisSteele, 16).unwrap().work, 49);
    assert_eq!(count_work_and_span(ScanAlgorithm::Blelloch, 16).unwrap().work, 46);
    assert_eq!(count_work_and_span(ScanAlgorithm::InplaceLaFi, 16).unwrap().work, 26);
    assert_eq!(count_work_and_span(ScanAlgorithm::SenguptaA, 16).unwrap().work, 26);
    assert_eq!(count_work_and_span(ScanAlgorithm::Sequential, 16).unwrap().work, 15);
}

#[test]
fn span_levels() {
    for l in 2..=10u32 {
        let t = 1usize << l;
        let ws = |a| count_work_and_span(a, t).unwrap().span_levels;
        assert_eq!(ws(ScanAlgorithm::HillisSteele), l as u64);
        assert_eq!(ws(ScanAlgorithm::Blelloch), 2 * l as u64 + 1);
        assert_eq!(ws(ScanAlgorithm::InplaceLaFi), 2 * l as u64 - 1);
        assert_eq!(ws(ScanAlgorithm::SenguptaA), 2 * l as u64 - 1);
        assert_eq!(ws(ScanAlgorithm::Sequential), 1);
    }
}

#[test]
fn sengupta_depth_rule() {
    use super::algorithms::sengupta_depth;
    assert_eq!(sengupta_depth(1024, 1), 10);
    assert_eq!(sengupta_depth(1024, 256), 2);
    assert_eq!(sengupta_depth(1024, 300), 2);
    assert_eq!(sengupta_depth(1024, 1024), 0);
    assert_eq!(sengupta_depth(1024, 15_000), 0);
    assert_eq!(sengupta_depth(1 << 20, 15_000), 7);
}

// Write-set recorder: a store that logs which iteration of the current launch
// touched each slot, and a backend that runs one iteration per kernel call.

thread_local! {
    static ITERATION: Cell<usize> = const { Cell::new(0) };
}

#[derive(Default)]
struct AccessLog {
    next_buffer: AtomicUsize,
    writes: Mutex<HashMap<(usize, usize), usize>>,
    reads: Mutex<HashMap<(usize, usize), Vec<usize>>>,
    conflicts: Mutex<Vec<String>>,
}

impl AccessLog {
    fn new_launch(&self) {
        self.writes.lock().unwrap().clear();
        self.reads.lock().unwrap().clear();
    }

    fn read(&self, slot: (usize, usize)) {
        let it = ITERATION.with(Cell::get);
        if let Some(&w) = self.writes.lock().unwrap().get(&slot) {
            if w != it {
                self.conflicts.lock().unwrap().push(format!("{slot:?} read by {it}, written by {w}"));
            }
        }
        self.reads.lock().unwrap().entry(slot).or_default().push(it);
    }

    fn write(&self, slot: (usize, usize)) {
        let it = ITERATION.with(Cell::get);
        if let Some(&w) = self.writes.lock().unwrap().get(&slot) {
            if w != it {
                self.conflicts.lock().unwrap().push(format!("{slot:?} written by {it} and {w}"));
            }
        }
        if let Some(rs) = self.reads.lock().unwrap().get(&slot) {
            if rs.iter().any(|&r| r != it) {
                self.conflicts.lock().unwrap().push(format!("{slot:?} written by {it}, read by others"));
            }
        }
        self.writes.lock().unwrap().insert(slot, it);
    }
}

struct Recorded<'l> {
    id: usize,
    inner: SoaStore<i64>,
    log: &'l AccessLog,
}

impl<'l> Recorded<'l> {
    fn new(inner: SoaStore<i64>, log: &'l AccessLog) -> Self {
        let id = log.next_buffer.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        Recorded { id, inner, log }
    }
}

impl<'l> ElementStore for Recorded<'l> {
    type Elem = i64;
    type Aux = Recorded<'l>;
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn alloc_aux(&self, len: usize) -> Self::Aux {
        Recorded::new(self.inner.alloc_aux(len), self.log)
    }
    unsafe fn load(&self, i: usize, into: &mut i64) {
        self.log.read((self.id, i));
        self.inner.load(i, into)
    }
    unsafe fn store(&self, i: usize, from: &i64) {
        self.log.write((self.id, i));
        self.inner.store(i, from)
    }
}

struct OneIterationPerCall<'l>(&'l AccessLog);

impl ExecBackend for OneIterationPerCall<'_> {
    fn launch(&self, n: usize, kernel: &Kernel<'_>) {
        self.0.new_launch();
        for i in 0..n {
            ITERATION.with(|c| c.set(i));
            kernel(i, n);
        }
    }
    fn workers(&self) -> usize {
        usize::MAX
    }
}

#[test]
fn launches_write_disjoint_slots() {
    for t in [2usize, 8, 32, 128] {
        for alg in all_algorithms().into_iter().filter(|a| *a != ScanAlgorithm::Sequential) {
            for reverse in [false, true] {
                let log = AccessLog::default();
                let input: Vec<i64> = (1..=t as i64).collect();
                let mut store = Recorded::new(SoaStore::from_elems(&input), &log);
                let backend = OneIterationPerCall(&log);
                if reverse {
                    scan_reverse(alg, &store, &AddOp, &backend).unwrap();
                } else {
                    scan_forward(alg, &store, &AddOp, &backend).unwrap();
                }
                let conflicts = log.conflicts.lock().unwrap().clone();
                assert!(conflicts.is_empty(), "{alg} T={t} reverse={reverse}: {conflicts:?}");
                let out = store.inner.to_vec(&0);
                let mut expect = input.clone();
                if reverse {
                    expect.reverse();
                    scan_sequential(&AddOp, &mut expect);
                    expect.reverse();
                } else {
                    scan_sequential(&AddOp, &mut expect);
                }
                assert_eq!(out, expect, "{alg} T={t} reverse={reverse}");
            }
        }
    }
}

#[test]
fn pool_backend_matches_serial() {
    let pool = PoolBackend::new(4).unwrap();
    let input: Vec<Range> = (0..256).map(Range::single).collect();
    for alg in all_algorithms() {
        let a = scan_vec(alg, false, &ConcatOp, &pool, input.clone()).unwrap();
        let b = scan_vec(alg, false, &ConcatOp, &SerialBackend, input.clone()).unwrap();
        assert_eq!(a, b, "{alg}");
    }
}
