//! Cholesky, LU with partial pivoting, triangular solves and Householder QR.
//!
//! None of the kernels branch on data in a way that changes the number of
//! arithmetic operations (pivot selection only compares), so the flop count of
//! a factorization or solve depends on the dimensions alone.

use super::{Mat, Scalar, Vector};
use crate::error::{Error, Result};

/// Right-hand sides accepted by the solvers: a matrix or a single column.
pub trait SolveRhs<S> {
    fn rhs_rows(&self) -> usize;
    fn rhs_cols(&self) -> usize;
    fn rhs_data(&mut self) -> &mut [S];
}

impl<S: Scalar> SolveRhs<S> for Mat<S> {
    fn rhs_rows(&self) -> usize {
        self.rows()
    }
    fn rhs_cols(&self) -> usize {
        self.cols()
    }
    fn rhs_data(&mut self) -> &mut [S] {
        self.as_mut_slice()
    }
}

impl<S: Scalar> SolveRhs<S> for Vector<S> {
    fn rhs_rows(&self) -> usize {
        self.len()
    }
    fn rhs_cols(&self) -> usize {
        1
    }
    fn rhs_data(&mut self) -> &mut [S] {
        self.as_mut_slice()
    }
}

fn require_square<S: Scalar>(op: &'static str, a: &Mat<S>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { op, lhs: a.shape(), rhs: (a.cols(), a.rows()) });
    }
    Ok(())
}

fn require_rhs<S: Scalar, B: SolveRhs<S>>(op: &'static str, a: &Mat<S>, b: &B) -> Result<()> {
    if a.rows() != b.rhs_rows() {
        return Err(Error::DimensionMismatch { op, lhs: a.shape(), rhs: (b.rhs_rows(), b.rhs_cols()) });
    }
    Ok(())
}

/// Overwrites `a` with its lower Cholesky factor; the strict upper triangle is zeroed.
pub fn cholesky_in_place<S: Scalar>(a: &mut Mat<S>) -> Result<()> {
    require_square("cholesky", a)?;
    let n = a.rows();
    let d = a.as_mut_slice();
    for j in 0..n {
        let mut pivot = d[j * n + j];
        for k in 0..j {
            pivot -= d[j * n + k] * d[j * n + k];
        }
        if !pivot.is_finite() || pivot <= S::ZERO {
            return Err(Error::NotPositiveDefinite { index: j, pivot: pivot.to_f64() });
        }
        let ljj = pivot.sqrt();
        d[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = d[i * n + j];
            for k in 0..j {
                s -= d[i * n + k] * d[j * n + k];
            }
            d[i * n + j] = s / ljj;
        }
        for k in (j + 1)..n {
            d[j * n + k] = S::ZERO;
        }
    }
    Ok(())
}

pub fn cholesky<S: Scalar>(a: &Mat<S>) -> Result<Mat<S>> {
    let mut l = a.clone();
    cholesky_in_place(&mut l)?;
    Ok(l)
}

/// Solves `L Lᵀ X = B` in place given the Cholesky factor `l`.
pub fn cholesky_solve_in_place<S: Scalar, B: SolveRhs<S>>(l: &Mat<S>, b: &mut B) -> Result<()> {
    require_rhs("cholesky_solve", l, b)?;
    let n = l.rows();
    let m = b.rhs_cols();
    let ld = l.as_slice();
    let bd = b.rhs_data();
    for c in 0..m {
        for i in 0..n {
            let mut s = bd[i * m + c];
            for k in 0..i {
                s -= ld[i * n + k] * bd[k * m + c];
            }
            bd[i * m + c] = s / ld[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = bd[i * m + c];
            for k in (i + 1)..n {
                s -= ld[k * n + i] * bd[k * m + c];
            }
            bd[i * m + c] = s / ld[i * n + i];
        }
    }
    Ok(())
}

/// LU factorization with partial pivoting, stored compactly.
///
/// `piv[k]` is the row exchanged with row `k` at elimination step `k`.
pub fn lu_in_place<S: Scalar>(a: &mut Mat<S>, piv: &mut [usize]) -> Result<()> {
    require_square("lu_factor", a)?;
    let n = a.rows();
    assert_eq!(piv.len(), n, "pivot buffer length");
    let d = a.as_mut_slice();
    for k in 0..n {
        let mut p = k;
        let mut best = d[k * n + k].abs();
        for i in (k + 1)..n {
            let v = d[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        piv[k] = p;
        if best == S::ZERO || !best.is_finite() {
            return Err(Error::Singular { index: k });
        }
        if p != k {
            for j in 0..n {
                d.swap(k * n + j, p * n + j);
            }
        }
        let pivot = d[k * n + k];
        for i in (k + 1)..n {
            let l = d[i * n + k] / pivot;
            d[i * n + k] = l;
            for j in (k + 1)..n {
                let u = d[k * n + j];
                d[i * n + j] -= l * u;
            }
        }
    }
    Ok(())
}

/// Solves `A X = B` in place from the compact factors of [`lu_in_place`].
pub fn lu_solve_in_place<S: Scalar, B: SolveRhs<S>>(lu: &Mat<S>, piv: &[usize], b: &mut B) -> Result<()> {
    require_rhs("lu_solve", lu, b)?;
    let n = lu.rows();
    let m = b.rhs_cols();
    let ld = lu.as_slice();
    let bd = b.rhs_data();
    for (k, &p) in piv.iter().enumerate() {
        if p != k {
            for c in 0..m {
                bd.swap(k * m + c, p * m + c);
            }
        }
    }
    for c in 0..m {
        for i in 1..n {
            let mut s = bd[i * m + c];
            for k in 0..i {
                s -= ld[i * n + k] * bd[k * m + c];
            }
            bd[i * m + c] = s;
        }
        for i in (0..n).rev() {
            let mut s = bd[i * m + c];
            for k in (i + 1)..n {
                s -= ld[i * n + k] * bd[k * m + c];
            }
            bd[i * m + c] = s / ld[i * n + i];
        }
    }
    Ok(())
}

/// Unpacked LU factors with `P·A = L·U`, where row `i` of `P·A` is row `perm[i]` of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct LuFactors<S: Scalar> {
    pub l: Mat<S>,
    pub u: Mat<S>,
    pub perm: Vec<usize>,
}

pub fn lu_factor<S: Scalar>(a: &Mat<S>) -> Result<LuFactors<S>> {
    let n = a.rows();
    let mut lu = a.clone();
    let mut piv = vec![0; n.min(a.cols())];
    require_square("lu_factor", a)?;
    lu_in_place(&mut lu, &mut piv)?;
    let mut perm: Vec<usize> = (0..n).collect();
    for (k, &p) in piv.iter().enumerate() {
        perm.swap(k, p);
    }
    let l = Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => lu[(i, j)],
        std::cmp::Ordering::Equal => S::ONE,
        std::cmp::Ordering::Less => S::ZERO,
    });
    let u = Mat::from_fn(n, n, |i, j| if i <= j { lu[(i, j)] } else { S::ZERO });
    Ok(LuFactors { l, u, perm })
}

/// Solves `a X = b` through LU with partial pivoting.
pub fn solve<S: Scalar, B: SolveRhs<S> + Clone>(a: &Mat<S>, b: &B) -> Result<B> {
    require_square("solve", a)?;
    require_rhs("solve", a, b)?;
    let mut lu = a.clone();
    let mut piv = vec![0; a.rows()];
    lu_in_place(&mut lu, &mut piv)?;
    let mut x = b.clone();
    lu_solve_in_place(&lu, &piv, &mut x)?;
    Ok(x)
}

/// Solves `a X = b` for symmetric positive definite `a` through Cholesky.
pub fn solve_spd<S: Scalar, B: SolveRhs<S> + Clone>(a: &Mat<S>, b: &B) -> Result<B> {
    require_rhs("solve_spd", a, b)?;
    let l = cholesky(a)?;
    let mut x = b.clone();
    cholesky_solve_in_place(&l, &mut x)?;
    Ok(x)
}

/// Orthonormal factor of a Householder QR, signed so that `R` has a
/// non-negative diagonal.
pub fn qr_qfactor<S: Scalar>(a: &Mat<S>) -> Result<Mat<S>> {
    require_square("qr_qfactor", a)?;
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Mat::<S>::identity(n);
    let tol = S::EPS * (n as f64) * a.max_abs().max(f64::MIN_POSITIVE);
    let mut v = vec![S::ZERO; n];
    let two = S::from_f64(2.0);
    for k in 0..n {
        let mut norm2 = r[(k, k)] * r[(k, k)];
        for i in (k + 1)..n {
            norm2 += r[(i, k)] * r[(i, k)];
        }
        let norm = norm2.sqrt();
        if norm.to_f64() <= tol {
            return Err(Error::Degenerate { index: k });
        }
        if k + 1 == n {
            break;
        }
        let alpha = if r[(k, k)] >= S::ZERO { -norm } else { norm };
        v[k] = r[(k, k)] - alpha;
        let mut vnorm2 = v[k] * v[k];
        for i in (k + 1)..n {
            v[i] = r[(i, k)];
            vnorm2 += v[i] * v[i];
        }
        let beta = two / vnorm2;
        // R ← H R on the trailing block.
        for j in k..n {
            let mut s = v[k] * r[(k, j)];
            for i in (k + 1)..n {
                s += v[i] * r[(i, j)];
            }
            let s = s * beta;
            for i in k..n {
                r[(i, j)] -= s * v[i];
            }
        }
        // Q ← Q H.
        for i in 0..n {
            let mut s = q[(i, k)] * v[k];
            for j in (k + 1)..n {
                s += q[(i, j)] * v[j];
            }
            let s = s * beta;
            for j in k..n {
                q[(i, j)] -= s * v[j];
            }
        }
    }
    for k in 0..n {
        if r[(k, k)] < S::ZERO {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(q)
}
