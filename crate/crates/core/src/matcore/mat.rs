//! Dense row-major matrices and vectors for the small-matrix regime.
//!
//! The `*_into` kernels write into caller-provided outputs and never allocate,
//! so they can run inside scan workers with per-worker scratch. The allocating
//! free functions ([`mat_mul`], [`mat_add`], ...) are thin wrappers over them.

use std::fmt;
use std::ops::{Index, IndexMut};

use super::Scalar;
use crate::error::{Error, Result};

/// Largest supported matrix side.
pub const MAX_DIM: usize = 16;

#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

#[derive(Clone, PartialEq)]
pub struct Vector<S> {
    data: Vec<S>,
}

fn check_dims(rows: usize, cols: usize) {
    assert!(
        (1..=MAX_DIM).contains(&rows) && (1..=MAX_DIM).contains(&cols),
        "matrix dimensions {rows}x{cols} outside 1..={MAX_DIM}"
    );
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        check_dims(rows, cols);
        Mat { rows, cols, data: vec![S::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.set_identity();
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        check_dims(rows, cols);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        check_dims(rows, cols);
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from `f64` row literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| S::from_f64(rows[i][j]))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { S::from_f64(values[i]) } else { S::ZERO })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn cast<T: Scalar>(&self) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn to_f64(&self) -> Mat<f64> {
        self.cast()
    }

    pub fn set_zero(&mut self) {
        self.data.fill(S::ZERO);
    }

    pub fn set_identity(&mut self) {
        self.set_zero();
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] = S::ONE;
        }
    }

    pub fn copy_from(&mut self, other: &Mat<S>) -> Result<()> {
        same_shape("copy_from", self, other)?;
        self.data.copy_from_slice(&other.data);
        Ok(())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.to_f64().abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|v| v.to_f64().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Mat<S> {
        let mut out = Mat::zeros(self.cols, self.rows);
        transpose_into(self, &mut out).expect("shape is correct by construction");
        out
    }

    /// Replaces `self` by `(self + selfᵀ) / 2`. Only off-diagonal pairs cost flops.
    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        let n = self.rows;
        let half = S::from_f64(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.data[i * n + j] + self.data[j * n + i]) * half;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `self += I`.
    pub fn add_identity(&mut self) {
        debug_assert!(self.is_square());
        for i in 0..self.rows {
            self.data[i * self.cols + i] += S::ONE;
        }
    }

    pub fn add_assign(&mut self, other: &Mat<S>) -> Result<()> {
        same_shape("add_assign", self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Mat<S>) -> Result<()> {
        same_shape("sub_assign", self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<S: Scalar> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[S]> = self.data.chunks(self.cols).collect();
        f.debug_struct("Mat").field("shape", &(self.rows, self.cols)).field("data", &rows).finish()
    }
}

impl<S: Scalar> Vector<S> {
    pub fn zeros(len: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&len), "vector length {len} outside 1..={MAX_DIM}");
        Vector { data: vec![S::ZERO; len] }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Self::zeros(values.len());
        for (d, s) in v.data.iter_mut().zip(values) {
            *d = S::from_f64(*s);
        }
        v
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> S) -> Self {
        let mut v = Self::zeros(len);
        for (i, d) in v.data.iter_mut().enumerate() {
            *d = f(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; vectors have at least one entry.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn cast<T: Scalar>(&self) -> Vector<T> {
        Vector { data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect() }
    }

    pub fn to_f64(&self) -> Vector<f64> {
        self.cast()
    }

    pub fn set_zero(&mut self) {
        self.data.fill(S::ZERO);
    }

    pub fn copy_from(&mut self, other: &Vector<S>) -> Result<()> {
        same_len("copy_from", self, other)?;
        self.data.copy_from_slice(&other.data);
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.to_f64().abs()))
    }

    pub fn add_assign(&mut self, other: &Vector<S>) -> Result<()> {
        same_len("add_assign", self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Vector<S>) -> Result<()> {
        same_len("sub_assign", self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<S: Scalar> Index<usize> for Vector<S> {
    type Output = S;
    #[inline]
    fn index(&self, i: usize) -> &S {
        &self.data[i]
    }
}

impl<S: Scalar> IndexMut<usize> for Vector<S> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.data[i]
    }
}

impl<S: Scalar> fmt::Debug for Vector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Vector").field(&self.data).finish()
    }
}

fn same_shape<S>(op: &'static str, a: &Mat<S>, b: &Mat<S>) -> Result<()> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::DimensionMismatch { op, lhs: (a.rows, a.cols), rhs: (b.rows, b.cols) });
    }
    Ok(())
}

fn same_len<S: Scalar>(op: &'static str, a: &Vector<S>, b: &Vector<S>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { op, lhs: (a.len(), 1), rhs: (b.len(), 1) });
    }
    Ok(())
}

fn mismatch(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Error {
    Error::DimensionMismatch { op, lhs, rhs }
}

// Kernels. Sums start from the first product so an inner product of length p
// costs p muls and p-1 adds.

/// `out = a · b`.
pub fn mat_mul_into<S: Scalar>(a: &Mat<S>, b: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    if a.cols != b.rows {
        return Err(mismatch("mat_mul", a.shape(), b.shape()));
    }
    if out.shape() != (a.rows, b.cols) {
        return Err(mismatch("mat_mul(out)", out.shape(), (a.rows, b.cols)));
    }
    let (n, p, m) = (a.rows, a.cols, b.cols);
    for i in 0..n {
        let arow = &a.data[i * p..(i + 1) * p];
        for j in 0..m {
            let mut acc = arow[0] * b.data[j];
            for (k, &aik) in arow.iter().enumerate().skip(1) {
                acc += aik * b.data[k * m + j];
            }
            out.data[i * m + j] = acc;
        }
    }
    Ok(())
}

/// `out = aᵀ · b`.
pub fn mat_tmul_into<S: Scalar>(a: &Mat<S>, b: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    if a.rows != b.rows {
        return Err(mismatch("mat_tmul", a.shape(), b.shape()));
    }
    if out.shape() != (a.cols, b.cols) {
        return Err(mismatch("mat_tmul(out)", out.shape(), (a.cols, b.cols)));
    }
    let (p, n, m) = (a.rows, a.cols, b.cols);
    for i in 0..n {
        for j in 0..m {
            let mut acc = a.data[i] * b.data[j];
            for k in 1..p {
                acc += a.data[k * n + i] * b.data[k * m + j];
            }
            out.data[i * m + j] = acc;
        }
    }
    Ok(())
}

/// `out = a · bᵀ`.
pub fn mat_mult_into<S: Scalar>(a: &Mat<S>, b: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    if a.cols != b.cols {
        return Err(mismatch("mat_mult", a.shape(), b.shape()));
    }
    if out.shape() != (a.rows, b.rows) {
        return Err(mismatch("mat_mult(out)", out.shape(), (a.rows, b.rows)));
    }
    let (n, p, m) = (a.rows, a.cols, b.rows);
    for i in 0..n {
        let arow = &a.data[i * p..(i + 1) * p];
        for j in 0..m {
            let brow = &b.data[j * p..(j + 1) * p];
            let mut acc = arow[0] * brow[0];
            for k in 1..p {
                acc += arow[k] * brow[k];
            }
            out.data[i * m + j] = acc;
        }
    }
    Ok(())
}

pub fn mat_add_into<S: Scalar>(a: &Mat<S>, b: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    same_shape("mat_add", a, b)?;
    same_shape("mat_add(out)", a, out)?;
    for ((o, x), y) in out.data.iter_mut().zip(&a.data).zip(&b.data) {
        *o = *x + *y;
    }
    Ok(())
}

pub fn mat_sub_into<S: Scalar>(a: &Mat<S>, b: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    same_shape("mat_sub", a, b)?;
    same_shape("mat_sub(out)", a, out)?;
    for ((o, x), y) in out.data.iter_mut().zip(&a.data).zip(&b.data) {
        *o = *x - *y;
    }
    Ok(())
}

pub fn transpose_into<S: Scalar>(a: &Mat<S>, out: &mut Mat<S>) -> Result<()> {
    if out.shape() != (a.cols, a.rows) {
        return Err(mismatch("transpose(out)", out.shape(), (a.cols, a.rows)));
    }
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.data[j * a.rows + i] = a.data[i * a.cols + j];
        }
    }
    Ok(())
}

/// `out = a · x`.
pub fn mat_vec_into<S: Scalar>(a: &Mat<S>, x: &Vector<S>, out: &mut Vector<S>) -> Result<()> {
    if a.cols != x.len() || out.len() != a.rows {
        return Err(mismatch("mat_vec", a.shape(), (x.len(), out.len())));
    }
    let p = a.cols;
    for i in 0..a.rows {
        let row = &a.data[i * p..(i + 1) * p];
        let mut acc = row[0] * x.data[0];
        for (&r, &xk) in row[1..].iter().zip(&x.data[1..]) {
            acc += r * xk;
        }
        out.data[i] = acc;
    }
    Ok(())
}

/// `out = aᵀ · x`.
pub fn mat_tvec_into<S: Scalar>(a: &Mat<S>, x: &Vector<S>, out: &mut Vector<S>) -> Result<()> {
    if a.rows != x.len() || out.len() != a.cols {
        return Err(mismatch("mat_tvec", a.shape(), (x.len(), out.len())));
    }
    let n = a.cols;
    for i in 0..n {
        let mut acc = a.data[i] * x.data[0];
        for k in 1..a.rows {
            acc += a.data[k * n + i] * x.data[k];
        }
        out.data[i] = acc;
    }
    Ok(())
}

pub fn vec_add_into<S: Scalar>(a: &Vector<S>, b: &Vector<S>, out: &mut Vector<S>) -> Result<()> {
    same_len("vec_add", a, b)?;
    same_len("vec_add(out)", a, out)?;
    for ((o, x), y) in out.data.iter_mut().zip(&a.data).zip(&b.data) {
        *o = *x + *y;
    }
    Ok(())
}

pub fn vec_sub_into<S: Scalar>(a: &Vector<S>, b: &Vector<S>, out: &mut Vector<S>) -> Result<()> {
    same_len("vec_sub", a, b)?;
    same_len("vec_sub(out)", a, out)?;
    for ((o, x), y) in out.data.iter_mut().zip(&a.data).zip(&b.data) {
        *o = *x - *y;
    }
    Ok(())
}

pub fn mat_mul<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    if a.cols != b.rows {
        return Err(mismatch("mat_mul", a.shape(), b.shape()));
    }
    let mut out = Mat::zeros(a.rows, b.cols);
    mat_mul_into(a, b, &mut out)?;
    Ok(out)
}

pub fn mat_add<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    let mut out = Mat::zeros(a.rows, a.cols);
    mat_add_into(a, b, &mut out)?;
    Ok(out)
}

pub fn mat_sub<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    let mut out = Mat::zeros(a.rows, a.cols);
    mat_sub_into(a, b, &mut out)?;
    Ok(out)
}

pub fn transpose<S: Scalar>(a: &Mat<S>) -> Mat<S> {
    a.transpose()
}

pub fn mat_vec<S: Scalar>(a: &Mat<S>, x: &Vector<S>) -> Result<Vector<S>> {
    let mut out = Vector::zeros(a.rows);
    mat_vec_into(a, x, &mut out)?;
    Ok(out)
}
