//! Scan elements and associative operators for parallel filtering and
//! smoothing.

use std::marker::PhantomData;

use crate::error::Result;
use crate::kalman_seq::{GaussianStats, Lgssm};
use crate::matcore::{
    cholesky_in_place, cholesky_solve_in_place, lu_in_place, lu_solve_in_place, mat_mul_into, mat_mult_into,
    mat_tmul_into, mat_tvec_into, mat_vec_into, Mat, Scalar, Vector,
};
use crate::scan::{AssocOp, SoaElement};

/// Filtering element: `p(x_k | y_k, x_{k−1}) = N(A x_{k−1} + b, C)` together
/// with the information-form likelihood `p(y_k | x_{k−1}) ∝ N_I(η, J)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterElement<S: Scalar> {
    pub a: Mat<S>,
    pub b: Vector<S>,
    pub c: Mat<S>,
    pub eta: Vector<S>,
    pub jmat: Mat<S>,
}

impl<S: Scalar> FilterElement<S> {
    pub fn zeros(nx: usize) -> Self {
        FilterElement {
            a: Mat::zeros(nx, nx),
            b: Vector::zeros(nx),
            c: Mat::zeros(nx, nx),
            eta: Vector::zeros(nx),
            jmat: Mat::zeros(nx, nx),
        }
    }

    /// The two-sided neutral element `(I, 0, 0, 0, 0)`.
    pub fn identity(nx: usize) -> Self {
        let mut e = Self::zeros(nx);
        e.a.set_identity();
        e
    }

    pub fn nx(&self) -> usize {
        self.b.len()
    }

    fn fill_nan(&mut self) {
        let nan = S::from_f64(f64::NAN);
        for m in [&mut self.a, &mut self.c, &mut self.jmat] {
            m.as_mut_slice().fill(nan);
        }
        for v in [&mut self.b, &mut self.eta] {
            v.as_mut_slice().fill(nan);
        }
    }
}

impl<S: Scalar> SoaElement for FilterElement<S> {
    type Word = S;

    fn widths(&self) -> Vec<usize> {
        let n = self.nx();
        vec![n * n, n, n * n, n, n * n]
    }

    fn read_field(&mut self, field: usize, src: &[S]) {
        match field {
            0 => self.a.as_mut_slice(),
            1 => self.b.as_mut_slice(),
            2 => self.c.as_mut_slice(),
            3 => self.eta.as_mut_slice(),
            _ => self.jmat.as_mut_slice(),
        }
        .copy_from_slice(src)
    }

    fn write_field(&self, field: usize, dst: &mut [S]) {
        dst.copy_from_slice(match field {
            0 => self.a.as_slice(),
            1 => self.b.as_slice(),
            2 => self.c.as_slice(),
            3 => self.eta.as_slice(),
            _ => self.jmat.as_slice(),
        })
    }
}

/// Smoothing element: `p(x_k | y_{1:k}, x_{k+1}) = N(E x_{k+1} + g, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmootherElement<S: Scalar> {
    pub e: Mat<S>,
    pub g: Vector<S>,
    pub l: Mat<S>,
}

impl<S: Scalar> SmootherElement<S> {
    pub fn zeros(nx: usize) -> Self {
        SmootherElement { e: Mat::zeros(nx, nx), g: Vector::zeros(nx), l: Mat::zeros(nx, nx) }
    }

    /// The two-sided neutral element `(I, 0, 0)`.
    pub fn identity(nx: usize) -> Self {
        let mut e = Self::zeros(nx);
        e.e.set_identity();
        e
    }
}

impl<S: Scalar> SoaElement for SmootherElement<S> {
    type Word = S;

    fn widths(&self) -> Vec<usize> {
        let n = self.g.len();
        vec![n * n, n, n * n]
    }

    fn read_field(&mut self, field: usize, src: &[S]) {
        match field {
            0 => self.e.as_mut_slice(),
            1 => self.g.as_mut_slice(),
            _ => self.l.as_mut_slice(),
        }
        .copy_from_slice(src)
    }

    fn write_field(&self, field: usize, dst: &mut [S]) {
        dst.copy_from_slice(match field {
            0 => self.e.as_slice(),
            1 => self.g.as_slice(),
            _ => self.l.as_slice(),
        })
    }
}

/// Working buffers for building filter elements.
pub struct FilterBuilder<S: Scalar> {
    m: Vector<S>,
    p: Mat<S>,
    fp: Mat<S>,
    hf: Mat<S>,
    hq: Mat<S>,
    s: Mat<S>,
    kt: Mat<S>,
    z: Mat<S>,
    tmp: Mat<S>,
    hu: Vector<S>,
    v: Vector<S>,
    w: Vector<S>,
    kv: Vector<S>,
}

impl<S: Scalar> FilterBuilder<S> {
    pub fn new(nx: usize, ny: usize) -> Self {
        FilterBuilder {
            m: Vector::zeros(nx),
            p: Mat::zeros(nx, nx),
            fp: Mat::zeros(nx, nx),
            hf: Mat::zeros(ny, nx),
            hq: Mat::zeros(ny, nx),
            s: Mat::zeros(ny, ny),
            kt: Mat::zeros(ny, nx),
            z: Mat::zeros(ny, nx),
            tmp: Mat::zeros(nx, nx),
            hu: Vector::zeros(ny),
            v: Vector::zeros(ny),
            w: Vector::zeros(ny),
            kv: Vector::zeros(nx),
        }
    }

    /// Element for step `t` (0-based) and measurement `y`.
    ///
    /// For `t > 0` the element conditions on `x_{t−1}` through `F_t, u_t, Q_t`.
    /// For `t = 0` the prior is folded in, so `A = 0`. In both cases `η, J`
    /// use the innovation covariance `S` of that branch.
    pub fn build(&mut self, model: &Lgssm<S>, t: usize, y: &Vector<S>, out: &mut FilterElement<S>) -> Result<()> {
        let (f, u, q, h, d, r) = (model.f(t), model.u(t), model.q(t), model.h(t), model.d(t), model.r(t));

        // Predicted mean and covariance of x_t given the conditioning state:
        // (u, Q) for t > 0, the propagated prior for t = 0.
        let (m, p) = if t == 0 {
            mat_vec_into(f, model.prior_mean(), &mut self.m)?;
            self.m.add_assign(u)?;
            mat_mul_into(f, model.prior_cov(), &mut self.fp)?;
            mat_mult_into(&self.fp, f, &mut self.p)?;
            self.p.add_assign(q)?;
            self.p.symmetrize();
            (&self.m, &self.p)
        } else {
            (u, q)
        };

        // S = H P Hᵀ + R, Kᵀ = S⁻¹ H P.
        mat_mul_into(h, p, &mut self.hq)?;
        mat_mult_into(&self.hq, h, &mut self.s)?;
        self.s.add_assign(r)?;
        cholesky_in_place(&mut self.s)?;
        self.kt.copy_from(&self.hq)?;
        cholesky_solve_in_place(&self.s, &mut self.kt)?;

        // b = m + K (y − H m − d).
        mat_vec_into(h, m, &mut self.hu)?;
        self.v.copy_from(y)?;
        self.v.sub_assign(&self.hu)?;
        self.v.sub_assign(d)?;
        mat_tvec_into(&self.kt, &self.v, &mut self.kv)?;
        out.b.copy_from(m)?;
        out.b.add_assign(&self.kv)?;

        // C = P − K H P.
        mat_tmul_into(&self.kt, &self.hq, &mut self.tmp)?;
        out.c.copy_from(p)?;
        out.c.sub_assign(&self.tmp)?;
        out.c.symmetrize();

        // A = (I − K H) F, or 0 when the prior is folded in.
        mat_mul_into(h, f, &mut self.hf)?;
        if t == 0 {
            out.a.set_zero();
            // Residual against the transition offset only.
            mat_vec_into(h, u, &mut self.hu)?;
            self.v.copy_from(y)?;
            self.v.sub_assign(&self.hu)?;
            self.v.sub_assign(d)?;
        } else {
            mat_tmul_into(&self.kt, &self.hf, &mut self.tmp)?;
            out.a.copy_from(f)?;
            out.a.sub_assign(&self.tmp)?;
        }

        // η = Fᵀ Hᵀ S⁻¹ (y − H u − d), J = Fᵀ Hᵀ S⁻¹ H F.
        self.w.copy_from(&self.v)?;
        cholesky_solve_in_place(&self.s, &mut self.w)?;
        mat_tvec_into(&self.hf, &self.w, &mut out.eta)?;
        self.z.copy_from(&self.hf)?;
        cholesky_solve_in_place(&self.s, &mut self.z)?;
        mat_tmul_into(&self.hf, &self.z, &mut out.jmat)?;
        out.jmat.symmetrize();
        Ok(())
    }
}

/// Convenience wrapper around [`FilterBuilder::build`].
pub fn make_filter_element<S: Scalar>(model: &Lgssm<S>, t: usize, y: &Vector<S>) -> Result<FilterElement<S>> {
    let mut out = FilterElement::zeros(model.nx());
    FilterBuilder::new(model.nx(), model.ny()).build(model, t, y, &mut out)?;
    Ok(out)
}

/// Working buffers for building smoother elements.
pub struct SmootherBuilder<S: Scalar> {
    fp: Mat<S>,
    pp: Mat<S>,
    et: Mat<S>,
    fx: Vector<S>,
    ef: Vector<S>,
    tmp: Mat<S>,
}

impl<S: Scalar> SmootherBuilder<S> {
    pub fn new(nx: usize) -> Self {
        SmootherBuilder {
            fp: Mat::zeros(nx, nx),
            pp: Mat::zeros(nx, nx),
            et: Mat::zeros(nx, nx),
            fx: Vector::zeros(nx),
            ef: Vector::zeros(nx),
            tmp: Mat::zeros(nx, nx),
        }
    }

    /// Element for step `t` of `steps` from the filtered statistics at `t`.
    pub fn build(
        &mut self,
        model: &Lgssm<S>,
        filtered: &GaussianStats<S>,
        t: usize,
        steps: usize,
        out: &mut SmootherElement<S>,
    ) -> Result<()> {
        let (x, p) = (&filtered.mean, &filtered.cov);
        if t + 1 == steps {
            out.e.set_zero();
            out.g.copy_from(x)?;
            out.l.copy_from(p)?;
            return Ok(());
        }
        let (f, u, q) = (model.f(t + 1), model.u(t + 1), model.q(t + 1));
        // Eᵀ = (F P Fᵀ + Q)⁻¹ F P.
        mat_mul_into(f, p, &mut self.fp)?;
        mat_mult_into(&self.fp, f, &mut self.pp)?;
        self.pp.add_assign(q)?;
        self.pp.symmetrize();
        cholesky_in_place(&mut self.pp)?;
        self.et.copy_from(&self.fp)?;
        cholesky_solve_in_place(&self.pp, &mut self.et)?;
        crate::matcore::transpose_into(&self.et, &mut out.e)?;
        // g = x − E (F x + u).
        mat_vec_into(f, x, &mut self.fx)?;
        self.fx.add_assign(u)?;
        mat_vec_into(&out.e, &self.fx, &mut self.ef)?;
        out.g.copy_from(x)?;
        out.g.sub_assign(&self.ef)?;
        // L = P − E F P.
        mat_mul_into(&out.e, &self.fp, &mut self.tmp)?;
        out.l.copy_from(p)?;
        out.l.sub_assign(&self.tmp)?;
        out.l.symmetrize();
        Ok(())
    }
}

/// Convenience wrapper around [`SmootherBuilder::build`].
pub fn make_smoother_element<S: Scalar>(
    model: &Lgssm<S>,
    filtered: &GaussianStats<S>,
    t: usize,
    steps: usize,
) -> Result<SmootherElement<S>> {
    let mut out = SmootherElement::zeros(model.nx());
    SmootherBuilder::new(model.nx()).build(model, filtered, t, steps, &mut out)?;
    Ok(out)
}

/// Filtering operator. Both inverses are applied through LU solves.
#[derive(Debug)]
pub struct FilterOp<S> {
    nx: usize,
    _s: PhantomData<fn() -> S>,
}

impl<S> FilterOp<S> {
    pub fn new(nx: usize) -> Self {
        FilterOp { nx, _s: PhantomData }
    }
}

impl<S> Clone for FilterOp<S> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<S> Copy for FilterOp<S> {}

pub struct FilterScratch<S: Scalar> {
    m: Mat<S>,
    piv: Vec<usize>,
    xa: Mat<S>,
    xc: Mat<S>,
    t: Mat<S>,
    xb: Vector<S>,
    cv: Vector<S>,
}

impl<S: Scalar> FilterOp<S> {
    fn combine_checked(
        &self,
        li: &FilterElement<S>,
        rj: &FilterElement<S>,
        out: &mut FilterElement<S>,
        sc: &mut FilterScratch<S>,
    ) -> Result<()> {
        // M = I + C_i J_j.
        mat_mul_into(&li.c, &rj.jmat, &mut sc.m)?;
        sc.m.add_identity();
        lu_in_place(&mut sc.m, &mut sc.piv)?;
        sc.xa.copy_from(&li.a)?;
        lu_solve_in_place(&sc.m, &sc.piv, &mut sc.xa)?;
        mat_vec_into(&li.c, &rj.eta, &mut sc.cv)?;
        sc.xb.copy_from(&li.b)?;
        sc.xb.add_assign(&sc.cv)?;
        lu_solve_in_place(&sc.m, &sc.piv, &mut sc.xb)?;
        sc.xc.copy_from(&li.c)?;
        lu_solve_in_place(&sc.m, &sc.piv, &mut sc.xc)?;

        mat_mul_into(&rj.a, &sc.xa, &mut out.a)?;
        mat_vec_into(&rj.a, &sc.xb, &mut out.b)?;
        out.b.add_assign(&rj.b)?;
        mat_mul_into(&rj.a, &sc.xc, &mut sc.t)?;
        mat_mult_into(&sc.t, &rj.a, &mut out.c)?;
        out.c.add_assign(&rj.c)?;
        out.c.symmetrize();

        // N = I + J_j C_i.
        mat_mul_into(&rj.jmat, &li.c, &mut sc.m)?;
        sc.m.add_identity();
        lu_in_place(&mut sc.m, &mut sc.piv)?;
        mat_vec_into(&rj.jmat, &li.b, &mut sc.cv)?;
        sc.xb.copy_from(&rj.eta)?;
        sc.xb.sub_assign(&sc.cv)?;
        lu_solve_in_place(&sc.m, &sc.piv, &mut sc.xb)?;
        mat_mul_into(&rj.jmat, &li.a, &mut sc.xa)?;
        lu_solve_in_place(&sc.m, &sc.piv, &mut sc.xa)?;

        mat_tvec_into(&li.a, &sc.xb, &mut out.eta)?;
        out.eta.add_assign(&li.eta)?;
        mat_tmul_into(&li.a, &sc.xa, &mut out.jmat)?;
        out.jmat.add_assign(&li.jmat)?;
        out.jmat.symmetrize();
        Ok(())
    }
}

impl<S: Scalar> AssocOp for FilterOp<S> {
    type Elem = FilterElement<S>;
    type Scratch = FilterScratch<S>;

    fn new_elem(&self) -> FilterElement<S> {
        FilterElement::zeros(self.nx)
    }

    fn new_scratch(&self) -> FilterScratch<S> {
        let n = self.nx;
        FilterScratch {
            m: Mat::zeros(n, n),
            piv: vec![0; n],
            xa: Mat::zeros(n, n),
            xc: Mat::zeros(n, n),
            t: Mat::zeros(n, n),
            xb: Vector::zeros(n),
            cv: Vector::zeros(n),
        }
    }

    /// A singular `I + C J` (impossible for valid elements) poisons the
    /// output with NaN instead of panicking inside a worker.
    fn combine(&self, left: &FilterElement<S>, right: &FilterElement<S>, out: &mut FilterElement<S>, sc: &mut FilterScratch<S>) {
        if self.combine_checked(left, right, out, sc).is_err() {
            out.fill_nan();
        }
    }

    fn set_identity(&self, out: &mut FilterElement<S>) {
        out.a.set_identity();
        out.b.set_zero();
        out.c.set_zero();
        out.eta.set_zero();
        out.jmat.set_zero();
    }
}

/// Smoothing operator.
#[derive(Debug)]
pub struct SmootherOp<S> {
    nx: usize,
    _s: PhantomData<fn() -> S>,
}

impl<S> SmootherOp<S> {
    pub fn new(nx: usize) -> Self {
        SmootherOp { nx, _s: PhantomData }
    }
}

impl<S> Clone for SmootherOp<S> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<S> Copy for SmootherOp<S> {}

impl<S: Scalar> AssocOp for SmootherOp<S> {
    type Elem = SmootherElement<S>;
    type Scratch = (Mat<S>, Vector<S>);

    fn new_elem(&self) -> SmootherElement<S> {
        SmootherElement::zeros(self.nx)
    }

    fn new_scratch(&self) -> (Mat<S>, Vector<S>) {
        (Mat::zeros(self.nx, self.nx), Vector::zeros(self.nx))
    }

    fn combine(
        &self,
        li: &SmootherElement<S>,
        rj: &SmootherElement<S>,
        out: &mut SmootherElement<S>,
        (t, v): &mut (Mat<S>, Vector<S>),
    ) {
        // Shapes are fixed by construction, so none of these can fail.
        mat_mul_into(&li.e, &rj.e, &mut out.e).expect("conformable");
        mat_vec_into(&li.e, &rj.g, v).expect("conformable");
        out.g.copy_from(v).expect("conformable");
        out.g.add_assign(&li.g).expect("conformable");
        mat_mul_into(&li.e, &rj.l, t).expect("conformable");
        mat_mult_into(t, &li.e, &mut out.l).expect("conformable");
        out.l.add_assign(&li.l).expect("conformable");
        out.l.symmetrize();
    }

    fn set_identity(&self, out: &mut SmootherElement<S>) {
        out.e.set_identity();
        out.g.set_zero();
        out.l.set_zero();
    }
}
