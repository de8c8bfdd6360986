//! Element storage shared by scan kernels.
//!
//! Stores hand out elements by index through `unsafe` load/store calls. The
//! caller promises that, within one launch, no slot is written by one
//! iteration while another iteration reads or writes it.

use std::cell::UnsafeCell;
use std::marker::PhantomData;

use crate::matcore::{Mat, Scalar, Vector};

/// Indexed element storage usable from concurrent scan workers.
pub trait ElementStore: Sync {
    type Elem;
    /// Scratch storage type allocated by algorithms that need extra buffers.
    type Aux: ElementStore<Elem = Self::Elem, Aux = Self::Aux>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn alloc_aux(&self, len: usize) -> Self::Aux;

    /// Copies slot `i` into `into`.
    ///
    /// # Safety
    /// `i < len()`, and no other thread may be writing slot `i`.
    unsafe fn load(&self, i: usize, into: &mut Self::Elem);

    /// Overwrites slot `i` with `from`.
    ///
    /// # Safety
    /// `i < len()`, and no other thread may access slot `i` concurrently.
    unsafe fn store(&self, i: usize, from: &Self::Elem);
}

/// Plain array with interior mutability that may be shared across threads.
pub struct SyncCells<W>(Box<[UnsafeCell<W>]>);

// SAFETY: access is coordinated by the disjoint-write contract of ElementStore.
unsafe impl<W: Send> Sync for SyncCells<W> {}

impl<W: Copy + Default> SyncCells<W> {
    pub fn new(len: usize) -> Self {
        SyncCells((0..len).map(|_| UnsafeCell::new(W::default())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// # Safety
    /// The range must be in bounds and not concurrently written.
    unsafe fn slice(&self, start: usize, len: usize) -> &[W] {
        debug_assert!(start + len <= self.0.len());
        // UnsafeCell<W> has the same layout as W.
        std::slice::from_raw_parts(self.0.as_ptr().add(start) as *const W, len)
    }

    /// # Safety
    /// The range must be in bounds and not concurrently accessed.
    #[allow(clippy::mut_from_ref)]
    unsafe fn slice_mut(&self, start: usize, len: usize) -> &mut [W] {
        debug_assert!(start + len <= self.0.len());
        std::slice::from_raw_parts_mut(UnsafeCell::raw_get(self.0.as_ptr().add(start)), len)
    }
}

/// An element that can be split into fixed-width fields of one word type.
///
/// Widths come from a prototype value, so runtime dimensions are allowed.
pub trait SoaElement {
    type Word: Copy + Default + Send + Sync;

    fn widths(&self) -> Vec<usize>;
    fn read_field(&mut self, field: usize, src: &[Self::Word]);
    fn write_field(&self, field: usize, dst: &mut [Self::Word]);
}

/// Structure-of-arrays store: one contiguous array per element field.
pub struct SoaStore<E: SoaElement> {
    len: usize,
    widths: Vec<usize>,
    fields: Vec<SyncCells<E::Word>>,
    _elem: PhantomData<fn() -> E>,
}

impl<E: SoaElement> SoaStore<E> {
    pub fn with_widths(widths: Vec<usize>, len: usize) -> Self {
        let fields = widths.iter().map(|w| SyncCells::new(w * len)).collect();
        SoaStore { len, widths, fields, _elem: PhantomData }
    }

    /// Zero-initialized store shaped like `proto`.
    pub fn new(proto: &E, len: usize) -> Self {
        Self::with_widths(proto.widths(), len)
    }

    pub fn from_elems(elems: &[E]) -> Self {
        let first = elems.first().expect("at least one element");
        let s = Self::new(first, elems.len());
        for (i, e) in elems.iter().enumerate() {
            s.set(i, e);
        }
        s
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Safe single-threaded read of slot `i`.
    pub fn get(&mut self, i: usize, into: &mut E) {
        assert!(i < self.len);
        // SAFETY: `&mut self` rules out concurrent access.
        unsafe { self.read(i, into) }
    }

    /// Reads every slot into clones of `proto`.
    pub fn to_vec(&mut self, proto: &E) -> Vec<E>
    where
        E: Clone,
    {
        (0..self.len)
            .map(|i| {
                let mut e = proto.clone();
                self.get(i, &mut e);
                e
            })
            .collect()
    }

    fn set(&self, i: usize, from: &E) {
        assert!(i < self.len);
        // SAFETY: only called during construction, before the store is shared.
        unsafe { self.write(i, from) }
    }

    unsafe fn read(&self, i: usize, into: &mut E) {
        for (f, (cells, &w)) in self.fields.iter().zip(&self.widths).enumerate() {
            into.read_field(f, cells.slice(i * w, w));
        }
    }

    unsafe fn write(&self, i: usize, from: &E) {
        for (f, (cells, &w)) in self.fields.iter().zip(&self.widths).enumerate() {
            from.write_field(f, cells.slice_mut(i * w, w));
        }
    }
}

impl<E: SoaElement> ElementStore for SoaStore<E> {
    type Elem = E;
    type Aux = SoaStore<E>;

    fn len(&self) -> usize {
        self.len
    }

    fn alloc_aux(&self, len: usize) -> Self::Aux {
        Self::with_widths(self.widths.clone(), len)
    }

    unsafe fn load(&self, i: usize, into: &mut E) {
        debug_assert!(i < self.len);
        self.read(i, into)
    }

    unsafe fn store(&self, i: usize, from: &E) {
        debug_assert!(i < self.len);
        self.write(i, from)
    }
}

/// A contiguous, optionally index-reversed view into another store.
pub struct Window<'a, X: ?Sized> {
    inner: &'a X,
    offset: usize,
    len: usize,
    reversed: bool,
}

impl<'a, X: ElementStore + ?Sized> Window<'a, X> {
    pub fn new(inner: &'a X, offset: usize, len: usize) -> Self {
        assert!(offset + len <= inner.len(), "window out of bounds");
        Window { inner, offset, len, reversed: false }
    }

    /// View of the whole store with slot `k` mapped to `len - 1 - k`.
    pub fn reversed(inner: &'a X) -> Self {
        Window { inner, offset: 0, len: inner.len(), reversed: true }
    }

    #[inline]
    fn map(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        if self.reversed {
            self.offset + self.len - 1 - i
        } else {
            self.offset + i
        }
    }
}

impl<X: ElementStore + ?Sized> ElementStore for Window<'_, X> {
    type Elem = X::Elem;
    type Aux = X::Aux;

    fn len(&self) -> usize {
        self.len
    }

    fn alloc_aux(&self, len: usize) -> Self::Aux {
        self.inner.alloc_aux(len)
    }

    unsafe fn load(&self, i: usize, into: &mut Self::Elem) {
        self.inner.load(self.map(i), into)
    }

    unsafe fn store(&self, i: usize, from: &Self::Elem) {
        self.inner.store(self.map(i), from)
    }
}

impl SoaElement for () {
    type Word = ();
    fn widths(&self) -> Vec<usize> {
        Vec::new()
    }
    fn read_field(&mut self, _: usize, _: &[()]) {}
    fn write_field(&self, _: usize, _: &mut [()]) {}
}

/// Store without payload, used when only the launch structure matters.
pub type UnitStore = SoaStore<()>;

impl UnitStore {
    pub fn unit(len: usize) -> Self {
        SoaStore::with_widths(Vec::new(), len)
    }
}

macro_rules! soa_word {
    ($($t:ty),*) => {$(
        impl SoaElement for $t {
            type Word = $t;
            fn widths(&self) -> Vec<usize> {
                vec![1]
            }
            fn read_field(&mut self, _: usize, src: &[$t]) {
                *self = src[0];
            }
            fn write_field(&self, _: usize, dst: &mut [$t]) {
                dst[0] = *self;
            }
        }
    )*};
}

soa_word!(i64, u64, f32, f64);

impl<S: Scalar> SoaElement for Mat<S> {
    type Word = S;
    fn widths(&self) -> Vec<usize> {
        vec![self.rows() * self.cols()]
    }
    fn read_field(&mut self, _: usize, src: &[S]) {
        self.as_mut_slice().copy_from_slice(src);
    }
    fn write_field(&self, _: usize, dst: &mut [S]) {
        dst.copy_from_slice(self.as_slice());
    }
}

impl<S: Scalar> SoaElement for Vector<S> {
    type Word = S;
    fn widths(&self) -> Vec<usize> {
        vec![self.len()]
    }
    fn read_field(&mut self, _: usize, src: &[S]) {
        self.as_mut_slice().copy_from_slice(src);
    }
    fn write_field(&self, _: usize, dst: &mut [S]) {
        dst.copy_from_slice(self.as_slice());
    }
}
