//! Associative operators.

use std::marker::PhantomData;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::matcore::{mat_mul_into, Mat, Scalar};

/// An associative binary operator with a two-sided neutral element.
///
/// `combine` computes `left ⊗ right` into `out`; `out` never aliases the
/// inputs. `Scratch` is per-worker working memory allocated once per launch.
pub trait AssocOp: Sync {
    type Elem;
    type Scratch;

    fn new_elem(&self) -> Self::Elem;
    fn new_scratch(&self) -> Self::Scratch;
    fn combine(&self, left: &Self::Elem, right: &Self::Elem, out: &mut Self::Elem, scratch: &mut Self::Scratch);
    fn set_identity(&self, out: &mut Self::Elem);

    fn identity(&self) -> Self::Elem {
        let mut e = self.new_elem();
        self.set_identity(&mut e);
        e
    }

    /// Allocating convenience wrapper around [`AssocOp::combine`].
    fn apply(&self, left: &Self::Elem, right: &Self::Elem) -> Self::Elem {
        let mut out = self.new_elem();
        let mut scratch = self.new_scratch();
        self.combine(left, right, &mut out, &mut scratch);
        out
    }
}

/// `a ⊗' b = b ⊗ a`; turns a forward scan over reversed indices into a
/// reverse scan.
#[derive(Clone, Copy, Debug)]
pub struct Flip<O>(pub O);

impl<O: AssocOp> AssocOp for Flip<O> {
    type Elem = O::Elem;
    type Scratch = O::Scratch;

    fn new_elem(&self) -> O::Elem {
        self.0.new_elem()
    }
    fn new_scratch(&self) -> O::Scratch {
        self.0.new_scratch()
    }
    fn combine(&self, left: &O::Elem, right: &O::Elem, out: &mut O::Elem, scratch: &mut O::Scratch) {
        self.0.combine(right, left, out, scratch)
    }
    fn set_identity(&self, out: &mut O::Elem) {
        self.0.set_identity(out)
    }
}

impl<O: AssocOp + ?Sized> AssocOp for &O {
    type Elem = O::Elem;
    type Scratch = O::Scratch;

    fn new_elem(&self) -> O::Elem {
        (**self).new_elem()
    }
    fn new_scratch(&self) -> O::Scratch {
        (**self).new_scratch()
    }
    fn combine(&self, left: &O::Elem, right: &O::Elem, out: &mut O::Elem, scratch: &mut O::Scratch) {
        (**self).combine(left, right, out, scratch)
    }
    fn set_identity(&self, out: &mut O::Elem) {
        (**self).set_identity(out)
    }
}

/// Wrapping integer addition. Exact, so scan results can be compared bit for bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct AddOp;

impl AssocOp for AddOp {
    type Elem = i64;
    type Scratch = ();

    fn new_elem(&self) -> i64 {
        0
    }
    fn new_scratch(&self) {}
    fn combine(&self, left: &i64, right: &i64, out: &mut i64, _: &mut ()) {
        *out = left.wrapping_add(*right);
    }
    fn set_identity(&self, out: &mut i64) {
        *out = 0;
    }
}

/// Square matrix product `left · right`.
#[derive(Debug)]
pub struct MatMulOp<S> {
    n: usize,
    _s: PhantomData<fn() -> S>,
}

impl<S> MatMulOp<S> {
    pub fn new(n: usize) -> Self {
        MatMulOp { n, _s: PhantomData }
    }
}

impl<S> Clone for MatMulOp<S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for MatMulOp<S> {}

impl<S: Scalar> AssocOp for MatMulOp<S> {
    type Elem = Mat<S>;
    type Scratch = ();

    fn new_elem(&self) -> Mat<S> {
        Mat::zeros(self.n, self.n)
    }
    fn new_scratch(&self) {}
    fn combine(&self, left: &Mat<S>, right: &Mat<S>, out: &mut Mat<S>, _: &mut ()) {
        mat_mul_into(left, right, out).expect("square operands of equal size");
    }
    fn set_identity(&self, out: &mut Mat<S>) {
        out.set_identity();
    }
}

/// Counts applications of the wrapped operator.
#[derive(Debug)]
pub struct CountingOp<O> {
    pub inner: O,
    count: AtomicU64,
}

impl<O> CountingOp<O> {
    pub fn new(inner: O) -> Self {
        CountingOp { inner, count: AtomicU64::new(0) }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }
}

impl<O: AssocOp> AssocOp for CountingOp<O> {
    type Elem = O::Elem;
    type Scratch = O::Scratch;

    fn new_elem(&self) -> O::Elem {
        self.inner.new_elem()
    }
    fn new_scratch(&self) -> O::Scratch {
        self.inner.new_scratch()
    }
    fn combine(&self, left: &O::Elem, right: &O::Elem, out: &mut O::Elem, scratch: &mut O::Scratch) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.combine(left, right, out, scratch)
    }
    fn set_identity(&self, out: &mut O::Elem) {
        self.inner.set_identity(out)
    }
}

/// Operator on payload-free elements; useful for counting and cost replay.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitOp;

impl AssocOp for UnitOp {
    type Elem = ();
    type Scratch = ();

    fn new_elem(&self) {}
    fn new_scratch(&self) {}
    fn combine(&self, _: &(), _: &(), _: &mut (), _: &mut ()) {}
    fn set_identity(&self, _: &mut ()) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_swaps_operands() {
        let op = MatMulOp::<f64>::new(2);
        let a = Mat::from_rows(&[&[1., 2.], &[3., 4.]]);
        let b = Mat::from_rows(&[&[0., 1.], &[1., 0.]]);
        assert_eq!(Flip(op).apply(&a, &b), op.apply(&b, &a));
        assert_ne!(op.apply(&a, &b), op.apply(&b, &a));
    }

    #[test]
    fn identities_are_neutral() {
        assert_eq!(AddOp.apply(&AddOp.identity(), &5), 5);
        let op = MatMulOp::<f64>::new(3);
        let a = Mat::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(op.apply(&a, &op.identity()), a);
        assert_eq!(op.apply(&op.identity(), &a), a);
    }

    #[test]
    fn add_wraps() {
        assert_eq!(AddOp.apply(&i64::MAX, &1), i64::MIN);
    }

    #[test]
    fn counting() {
        let op = CountingOp::new(AddOp);
        for _ in 0..3 {
            op.apply(&1, &2);
        }
        assert_eq!(op.count(), 3);
    }
}
