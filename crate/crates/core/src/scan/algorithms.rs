//! In-place inclusive scan kernels over an [`ElementStore`].
//!
//! Indices are 0-based. Every function expects `store.len()` to be a power of
//! two greater than one; the dispatcher in the parent module checks this.

use super::backend::{strided, ExecBackend};
use super::ops::AssocOp;
use super::store::{ElementStore, Window};

/// Per-worker registers: two operands, a result and the operator's scratch.
struct Worker<'o, O: AssocOp> {
    op: &'o O,
    l: O::Elem,
    r: O::Elem,
    out: O::Elem,
    scratch: O::Scratch,
}

impl<'o, O: AssocOp> Worker<'o, O> {
    fn new(op: &'o O) -> Self {
        Worker { op, l: op.new_elem(), r: op.new_elem(), out: op.new_elem(), scratch: op.new_scratch() }
    }

    /// `dst[id] = a[ia] ⊗ b[ib]`.
    unsafe fn combine<A, B, D>(&mut self, a: &A, ia: usize, b: &B, ib: usize, dst: &D, id: usize)
    where
        A: ElementStore<Elem = O::Elem> + ?Sized,
        B: ElementStore<Elem = O::Elem> + ?Sized,
        D: ElementStore<Elem = O::Elem> + ?Sized,
    {
        a.load(ia, &mut self.l);
        b.load(ib, &mut self.r);
        self.op.combine(&self.l, &self.r, &mut self.out, &mut self.scratch);
        dst.store(id, &self.out);
    }

    unsafe fn copy<A, D>(&mut self, src: &A, is: usize, dst: &D, id: usize)
    where
        A: ElementStore<Elem = O::Elem> + ?Sized,
        D: ElementStore<Elem = O::Elem> + ?Sized,
    {
        src.load(is, &mut self.l);
        dst.store(id, &self.l);
    }
}

fn log2(t: usize) -> u32 {
    debug_assert!(t.is_power_of_two());
    t.trailing_zeros()
}

/// Plain left fold in a single one-iteration launch.
pub(super) fn sequential<X, O, B>(store: &X, op: &O, backend: &B)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    backend.launch(1, &|index, stride| {
        let mut w = Worker::new(op);
        for _ in strided(index, stride, 1) {
            for k in 1..t {
                unsafe { w.combine(store, k - 1, store, k, store, k) };
            }
        }
    });
}

fn copy_all<S, D, O, B>(src: &S, dst: &D, op: &O, backend: &B)
where
    S: ElementStore + ?Sized,
    D: ElementStore<Elem = S::Elem> + ?Sized,
    O: AssocOp<Elem = S::Elem>,
    B: ExecBackend + ?Sized,
{
    let n = src.len();
    backend.launch(n, &|index, stride| {
        let mut w = Worker::new(op);
        for i in strided(index, stride, n) {
            unsafe { w.copy(src, i, dst, i) };
        }
    });
}

/// One Hillis–Steele level: `dst[j] = src[j - s] ⊗ src[j]` for `j ≥ s`, plain
/// copies below `s`.
fn hs_level<S, D, O, B>(src: &S, dst: &D, s: usize, op: &O, backend: &B)
where
    S: ElementStore + ?Sized,
    D: ElementStore<Elem = S::Elem> + ?Sized,
    O: AssocOp<Elem = S::Elem>,
    B: ExecBackend + ?Sized,
{
    let n = src.len();
    backend.launch(n, &|index, stride| {
        let mut w = Worker::new(op);
        for j in strided(index, stride, n) {
            unsafe {
                if j >= s {
                    w.combine(src, j - s, src, j, dst, j);
                } else {
                    w.copy(src, j, dst, j);
                }
            }
        }
    });
}

/// Hillis–Steele with two ping-pong buffers. `max_levels` stops early, which
/// is only useful for inspecting intermediate states.
pub(super) fn hillis_steele<X, O, B>(store: &X, op: &O, backend: &B, max_levels: Option<u32>)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    let levels = max_levels.map_or(log2(t), |m| m.min(log2(t)));
    if levels == 0 {
        return;
    }
    let aux = store.alloc_aux(t);
    for d in 0..levels {
        let s = 1usize << d;
        if d % 2 == 0 {
            hs_level(store, &aux, s, op, backend);
        } else {
            hs_level(&aux, store, s, op, backend);
        }
    }
    if levels % 2 == 1 {
        copy_all(&aux, store, op, backend);
    }
}

/// Shared up-sweep: after level `d`, slot `m·2^(d+1) − 1` holds the reduction
/// of its block. With `zero_last`, the final slot is overwritten by the
/// neutral element in the same launch that computes it.
fn up_sweep<X, O, B>(store: &X, op: &O, backend: &B, zero_last: bool)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    let levels = log2(t);
    for d in 0..levels {
        let n = t >> (d + 1);
        let half = 1usize << d;
        let zero = zero_last && d + 1 == levels;
        backend.launch(n, &|index, stride| {
            let mut w = Worker::new(op);
            for it in strided(index, stride, n) {
                let i = it << (d + 1);
                let j = i + half - 1;
                let k = i + 2 * half - 1;
                unsafe {
                    if zero && k == t - 1 {
                        // The total is computed but replaced by the neutral element.
                        store.load(j, &mut w.l);
                        store.load(k, &mut w.r);
                        op.combine(&w.l, &w.r, &mut w.out, &mut w.scratch);
                        op.set_identity(&mut w.out);
                        store.store(k, &w.out);
                    } else {
                        w.combine(store, j, store, k, store, k);
                    }
                }
            }
        });
    }
}

/// Exclusive up-sweep/down-sweep scan followed by an inclusive pass against a
/// saved copy of the input.
pub(super) fn blelloch<X, O, B>(store: &X, op: &O, backend: &B)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    let saved = store.alloc_aux(t);
    copy_all(store, &saved, op, backend);
    up_sweep(store, op, backend, true);
    for d in (0..log2(t)).rev() {
        let n = t >> (d + 1);
        let half = 1usize << d;
        backend.launch(n, &|index, stride| {
            let mut w = Worker::new(op);
            for it in strided(index, stride, n) {
                let i = it << (d + 1);
                let j = i + half - 1;
                let k = i + 2 * half - 1;
                unsafe {
                    store.load(k, &mut w.l);
                    store.load(j, &mut w.r);
                    op.combine(&w.l, &w.r, &mut w.out, &mut w.scratch);
                    store.store(j, &w.l);
                    store.store(k, &w.out);
                }
            }
        });
    }
    backend.launch(t, &|index, stride| {
        let mut w = Worker::new(op);
        for i in strided(index, stride, t) {
            unsafe { w.combine(store, i, &saved, i, store, i) };
        }
    });
}

/// Work-efficient in-place circuit: up-sweep, then fill the remaining slots
/// from the coarsest level down.
pub(super) fn inplace_lafi<X, O, B>(store: &X, op: &O, backend: &B)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    up_sweep(store, op, backend, false);
    let levels = log2(t);
    for d in (0..levels.saturating_sub(1)).rev() {
        let half = 1usize << d;
        let n = (t >> (d + 1)) - 1;
        backend.launch(n, &|index, stride| {
            let mut w = Worker::new(op);
            for it in strided(index, stride, n) {
                let src = ((it + 1) << (d + 1)) - 1;
                let dst = src + half;
                unsafe { w.combine(store, src, store, dst, store, dst) };
            }
        });
    }
}

/// Number of pairwise-reduction levels before switching to Hillis–Steele.
pub(crate) fn sengupta_depth(t: usize, n: usize) -> u32 {
    let mut d = 0;
    while (t >> d) > n.max(1) {
        d += 1;
    }
    d
}

fn reduce_level<S, D, O, B>(child: &S, parent: &D, op: &O, backend: &B)
where
    S: ElementStore + ?Sized,
    D: ElementStore<Elem = S::Elem> + ?Sized,
    O: AssocOp<Elem = S::Elem>,
    B: ExecBackend + ?Sized,
{
    let n = parent.len();
    backend.launch(n, &|index, stride| {
        let mut w = Worker::new(op);
        for i in strided(index, stride, n) {
            unsafe { w.combine(child, 2 * i, child, 2 * i + 1, parent, i) };
        }
    });
}

fn distribute_level<P, C, O, B>(parent: &P, child: &C, op: &O, backend: &B)
where
    P: ElementStore + ?Sized,
    C: ElementStore<Elem = P::Elem> + ?Sized,
    O: AssocOp<Elem = P::Elem>,
    B: ExecBackend + ?Sized,
{
    let n = child.len();
    backend.launch(n, &|index, stride| {
        let mut w = Worker::new(op);
        for i in strided(index, stride, n) {
            unsafe {
                if i % 2 == 1 {
                    w.copy(parent, (i - 1) / 2, child, i);
                } else if i > 0 {
                    w.combine(parent, i / 2 - 1, child, i, child, i);
                }
            }
        }
    });
}

/// Pairwise reductions up to the level holding at most `n` elements,
/// Hillis–Steele there, then distribution back down. Levels `1..=d*` share one
/// arena; level `d` starts at `T − T/2^(d−1)`.
pub(super) fn sengupta<X, O, B>(store: &X, op: &O, backend: &B, n: usize)
where
    X: ElementStore + ?Sized,
    O: AssocOp<Elem = X::Elem>,
    B: ExecBackend + ?Sized,
{
    let t = store.len();
    let depth = sengupta_depth(t, n) as usize;
    if depth == 0 {
        hillis_steele(store, op, backend, None);
        return;
    }
    let arena = store.alloc_aux(t - (t >> depth));
    let level = |d: usize| Window::new(&arena, t - (t >> (d - 1)), t >> d);

    reduce_level(store, &level(1), op, backend);
    for d in 2..=depth {
        reduce_level(&level(d - 1), &level(d), op, backend);
    }
    hillis_steele(&level(depth), op, backend, None);
    for d in (2..=depth).rev() {
        distribute_level(&level(d), &level(d - 1), op, backend);
    }
    distribute_level(&level(1), store, op, backend);
}

#[cfg(test)]
pub(super) mod test_hooks {
    use super::*;

    pub fn hillis_steele_partial<X, O, B>(store: &X, op: &O, backend: &B, levels: u32)
    where
        X: ElementStore + ?Sized,
        O: AssocOp<Elem = X::Elem>,
        B: ExecBackend + ?Sized,
    {
        hillis_steele(store, op, backend, Some(levels))
    }
}
