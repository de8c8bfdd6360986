//! Linear-Gaussian state-space models and the sequential reference filters:
//! Kalman filter, RTS smoother, backward information filter and two-filter
//! smoother.
//!
//! Steps are 0-based. State `t` is reached from state `t − 1` (or from the
//! prior when `t = 0`) through `F_t, u_t, Q_t` and observed through
//! `H_t, d_t, R_t`.

use crate::error::{Error, Result};
use crate::matcore::{
    cholesky_in_place, cholesky_solve_in_place, lu_in_place, lu_solve_in_place, mat_mul, mat_mul_into, mat_mult_into,
    mat_tmul_into, mat_tvec_into, mat_vec_into, solve, solve_spd, Mat, Scalar, Vector,
};
use crate::scan::SoaElement;

/// Time-varying linear-Gaussian state-space model.
#[derive(Clone, Debug, PartialEq)]
pub struct Lgssm<S: Scalar> {
    f: Vec<Mat<S>>,
    u: Vec<Vector<S>>,
    q: Vec<Mat<S>>,
    h: Vec<Mat<S>>,
    d: Vec<Vector<S>>,
    r: Vec<Mat<S>>,
    m0: Vector<S>,
    p0: Mat<S>,
}

/// Per-step model parameters, used to build an [`Lgssm`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepParams<S: Scalar> {
    pub f: Mat<S>,
    pub u: Vector<S>,
    pub q: Mat<S>,
    pub h: Mat<S>,
    pub d: Vector<S>,
    pub r: Mat<S>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidModel(msg)
}

impl<S: Scalar> Lgssm<S> {
    pub fn new(steps: Vec<StepParams<S>>, m0: Vector<S>, p0: Mat<S>) -> Result<Self> {
        let nx = m0.len();
        if steps.is_empty() {
            return Err(invalid("a model needs at least one step".into()));
        }
        if p0.shape() != (nx, nx) {
            return Err(invalid(format!("prior covariance is {:?}, expected {nx}x{nx}", p0.shape())));
        }
        let ny = steps[0].h.rows();
        for (t, s) in steps.iter().enumerate() {
            let ok = s.f.shape() == (nx, nx)
                && s.u.len() == nx
                && s.q.shape() == (nx, nx)
                && s.h.shape() == (ny, nx)
                && s.d.len() == ny
                && s.r.shape() == (ny, ny);
            if !ok {
                return Err(invalid(format!("step {t} has inconsistent dimensions for nx={nx}, ny={ny}")));
            }
        }
        let mut m = Lgssm {
            f: Vec::with_capacity(steps.len()),
            u: Vec::with_capacity(steps.len()),
            q: Vec::with_capacity(steps.len()),
            h: Vec::with_capacity(steps.len()),
            d: Vec::with_capacity(steps.len()),
            r: Vec::with_capacity(steps.len()),
            m0,
            p0,
        };
        for s in steps {
            m.f.push(s.f);
            m.u.push(s.u);
            m.q.push(s.q);
            m.h.push(s.h);
            m.d.push(s.d);
            m.r.push(s.r);
        }
        Ok(m)
    }

    /// Time-invariant model of length `steps`.
    pub fn constant(steps: usize, params: StepParams<S>, m0: Vector<S>, p0: Mat<S>) -> Result<Self> {
        Self::new(vec![params; steps], m0, p0)
    }

    pub fn steps(&self) -> usize {
        self.f.len()
    }

    pub fn nx(&self) -> usize {
        self.m0.len()
    }

    pub fn ny(&self) -> usize {
        self.h[0].rows()
    }

    pub fn f(&self, t: usize) -> &Mat<S> {
        &self.f[t]
    }
    pub fn u(&self, t: usize) -> &Vector<S> {
        &self.u[t]
    }
    pub fn q(&self, t: usize) -> &Mat<S> {
        &self.q[t]
    }
    pub fn h(&self, t: usize) -> &Mat<S> {
        &self.h[t]
    }
    pub fn d(&self, t: usize) -> &Vector<S> {
        &self.d[t]
    }
    pub fn r(&self, t: usize) -> &Mat<S> {
        &self.r[t]
    }
    pub fn prior_mean(&self) -> &Vector<S> {
        &self.m0
    }
    pub fn prior_cov(&self) -> &Mat<S> {
        &self.p0
    }

    pub fn step(&self, t: usize) -> StepParams<S> {
        StepParams {
            f: self.f[t].clone(),
            u: self.u[t].clone(),
            q: self.q[t].clone(),
            h: self.h[t].clone(),
            d: self.d[t].clone(),
            r: self.r[t].clone(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Lgssm<T> {
        Lgssm {
            f: self.f.iter().map(Mat::cast).collect(),
            u: self.u.iter().map(Vector::cast).collect(),
            q: self.q.iter().map(Mat::cast).collect(),
            h: self.h.iter().map(Mat::cast).collect(),
            d: self.d.iter().map(Vector::cast).collect(),
            r: self.r.iter().map(Mat::cast).collect(),
            m0: self.m0.cast(),
            p0: self.p0.cast(),
        }
    }

    /// First `steps` steps of the model.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps() {
            return Err(invalid(format!("cannot truncate a {}-step model to {steps}", self.steps())));
        }
        let mut m = self.clone();
        for v in [&mut m.f, &mut m.q, &mut m.h, &mut m.r] {
            v.truncate(steps);
        }
        m.u.truncate(steps);
        m.d.truncate(steps);
        Ok(m)
    }

    pub(crate) fn check_measurements(&self, ys: &[Vector<S>]) -> Result<()> {
        if ys.len() != self.steps() {
            return Err(invalid(format!("{} measurements for a {}-step model", ys.len(), self.steps())));
        }
        if let Some(t) = ys.iter().position(|y| y.len() != self.ny()) {
            return Err(invalid(format!("measurement {t} has length {}, expected {}", ys[t].len(), self.ny())));
        }
        Ok(())
    }
}

/// Mean and covariance of a Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStats<S: Scalar> {
    pub mean: Vector<S>,
    pub cov: Mat<S>,
}

impl<S: Scalar> GaussianStats<S> {
    pub fn new(mean: Vector<S>, cov: Mat<S>) -> Self {
        GaussianStats { mean, cov }
    }

    pub fn zeros(nx: usize) -> Self {
        GaussianStats { mean: Vector::zeros(nx), cov: Mat::zeros(nx, nx) }
    }

    pub fn to_f64(&self) -> GaussianStats<f64> {
        GaussianStats { mean: self.mean.to_f64(), cov: self.cov.to_f64() }
    }
}

/// Information vector and matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoStats<S: Scalar> {
    pub eta: Vector<S>,
    pub jmat: Mat<S>,
}

impl<S: Scalar> InfoStats<S> {
    pub fn zeros(nx: usize) -> Self {
        InfoStats { eta: Vector::zeros(nx), jmat: Mat::zeros(nx, nx) }
    }

    pub fn to_f64(&self) -> InfoStats<f64> {
        InfoStats { eta: self.eta.to_f64(), jmat: self.jmat.to_f64() }
    }
}

macro_rules! soa_pair {
    ($ty:ident, $v:ident, $m:ident) => {
        impl<S: Scalar> SoaElement for $ty<S> {
            type Word = S;
            fn widths(&self) -> Vec<usize> {
                vec![self.$v.len(), self.$m.rows() * self.$m.cols()]
            }
            fn read_field(&mut self, field: usize, src: &[S]) {
                match field {
                    0 => self.$v.as_mut_slice().copy_from_slice(src),
                    _ => self.$m.as_mut_slice().copy_from_slice(src),
                }
            }
            fn write_field(&self, field: usize, dst: &mut [S]) {
                match field {
                    0 => dst.copy_from_slice(self.$v.as_slice()),
                    _ => dst.copy_from_slice(self.$m.as_slice()),
                }
            }
        }
    };
}

soa_pair!(GaussianStats, mean, cov);
soa_pair!(InfoStats, eta, jmat);

/// Working buffers for one Kalman filter step.
pub(crate) struct KfScratch<S: Scalar> {
    fp: Mat<S>,
    hp: Mat<S>,
    s: Mat<S>,
    kt: Mat<S>,
    khp: Mat<S>,
    hx: Vector<S>,
    v: Vector<S>,
    kv: Vector<S>,
}

impl<S: Scalar> KfScratch<S> {
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        KfScratch {
            fp: Mat::zeros(nx, nx),
            hp: Mat::zeros(ny, nx),
            s: Mat::zeros(ny, ny),
            kt: Mat::zeros(ny, nx),
            khp: Mat::zeros(nx, nx),
            hx: Vector::zeros(ny),
            v: Vector::zeros(ny),
            kv: Vector::zeros(nx),
        }
    }
}

/// `(F m + u, F P Fᵀ + Q)` written into `out`.
pub(crate) fn predict_into<S: Scalar>(
    stats: &GaussianStats<S>,
    f: &Mat<S>,
    u: &Vector<S>,
    q: &Mat<S>,
    out: &mut GaussianStats<S>,
    sc: &mut KfScratch<S>,
) -> Result<()> {
    mat_vec_into(f, &stats.mean, &mut out.mean)?;
    out.mean.add_assign(u)?;
    mat_mul_into(f, &stats.cov, &mut sc.fp)?;
    mat_mult_into(&sc.fp, f, &mut out.cov)?;
    out.cov.add_assign(q)?;
    out.cov.symmetrize();
    Ok(())
}

/// Measurement update of `stats` in place with `S = H P Hᵀ + R` and
/// `Kᵀ = S⁻¹ H P` from a Cholesky solve.
pub(crate) fn update_in_place<S: Scalar>(
    stats: &mut GaussianStats<S>,
    h: &Mat<S>,
    d: &Vector<S>,
    r: &Mat<S>,
    y: &Vector<S>,
    sc: &mut KfScratch<S>,
) -> Result<()> {
    mat_mul_into(h, &stats.cov, &mut sc.hp)?;
    mat_mult_into(&sc.hp, h, &mut sc.s)?;
    sc.s.add_assign(r)?;
    cholesky_in_place(&mut sc.s)?;
    sc.kt.copy_from(&sc.hp)?;
    cholesky_solve_in_place(&sc.s, &mut sc.kt)?;
    mat_vec_into(h, &stats.mean, &mut sc.hx)?;
    sc.v.copy_from(y)?;
    sc.v.sub_assign(&sc.hx)?;
    sc.v.sub_assign(d)?;
    mat_tvec_into(&sc.kt, &sc.v, &mut sc.kv)?;
    stats.mean.add_assign(&sc.kv)?;
    mat_tmul_into(&sc.kt, &sc.hp, &mut sc.khp)?;
    stats.cov.sub_assign(&sc.khp)?;
    stats.cov.symmetrize();
    Ok(())
}

/// Prediction from step `t − 1` (or the prior) to step `t`.
pub fn kf_predict<S: Scalar>(stats: &GaussianStats<S>, model: &Lgssm<S>, t: usize) -> Result<GaussianStats<S>> {
    let mut out = GaussianStats::zeros(model.nx());
    let mut sc = KfScratch::new(model.nx(), model.ny());
    predict_into(stats, model.f(t), model.u(t), model.q(t), &mut out, &mut sc)?;
    Ok(out)
}

/// Update of the predicted statistics at step `t` with measurement `y`.
pub fn kf_update<S: Scalar>(pred: &GaussianStats<S>, model: &Lgssm<S>, t: usize, y: &Vector<S>) -> Result<GaussianStats<S>> {
    let mut out = pred.clone();
    let mut sc = KfScratch::new(model.nx(), model.ny());
    update_in_place(&mut out, model.h(t), model.d(t), model.r(t), y, &mut sc)?;
    Ok(out)
}

/// One predict+update step from `prev` into `out`.
pub(crate) fn kf_step_into<S: Scalar>(
    prev: &GaussianStats<S>,
    model: &Lgssm<S>,
    t: usize,
    y: &Vector<S>,
    out: &mut GaussianStats<S>,
    sc: &mut KfScratch<S>,
) -> Result<()> {
    predict_into(prev, model.f(t), model.u(t), model.q(t), out, sc)?;
    update_in_place(out, model.h(t), model.d(t), model.r(t), y, sc)
}

/// Filtered statistics for every step.
pub fn kf_run<S: Scalar>(model: &Lgssm<S>, ys: &[Vector<S>]) -> Result<Vec<GaussianStats<S>>> {
    model.check_measurements(ys)?;
    let mut sc = KfScratch::new(model.nx(), model.ny());
    let mut out: Vec<GaussianStats<S>> = Vec::with_capacity(ys.len());
    let mut prev = GaussianStats::new(model.prior_mean().clone(), model.prior_cov().clone());
    for (t, y) in ys.iter().enumerate() {
        let mut next = GaussianStats::zeros(model.nx());
        kf_step_into(&prev, model, t, y, &mut next, &mut sc)?;
        out.push(next.clone());
        prev = next;
    }
    Ok(out)
}

/// RTS smoother over filtered statistics from [`kf_run`].
pub fn rts_run<S: Scalar>(model: &Lgssm<S>, filtered: &[GaussianStats<S>]) -> Result<Vec<GaussianStats<S>>> {
    let n = filtered.len();
    if n != model.steps() {
        return Err(invalid(format!("{n} filtered states for a {}-step model", model.steps())));
    }
    let mut out = filtered.to_vec();
    for t in (0..n.saturating_sub(1)).rev() {
        let cur = &filtered[t];
        let pred = kf_predict(cur, model, t + 1)?;
        // Gᵀ = P⁻¹_{t+1|t} F P_{t|t}, solved with LU.
        let fp = mat_mul(model.f(t + 1), &cur.cov)?;
        let g = solve(&pred.cov, &fp)?.transpose();
        let next = &out[t + 1];
        let mut dm = next.mean.clone();
        dm.sub_assign(&pred.mean)?;
        let mut mean = cur.mean.clone();
        let mut gdm = Vector::zeros(model.nx());
        mat_vec_into(&g, &dm, &mut gdm)?;
        mean.add_assign(&gdm)?;
        let mut dp = next.cov.clone();
        dp.sub_assign(&pred.cov)?;
        let mut cov = mat_mul(&mat_mul(&g, &dp)?, &g.transpose())?;
        cov.add_assign(&cur.cov)?;
        cov.symmetrize();
        out[t] = GaussianStats::new(mean, cov);
    }
    Ok(out)
}

/// Backward information filter. Entry `t` holds the information about state
/// `t` carried by the measurements after it; the last entry is zero.
pub fn bif_run<S: Scalar>(model: &Lgssm<S>, ys: &[Vector<S>]) -> Result<Vec<InfoStats<S>>> {
    model.check_measurements(ys)?;
    let (nx, n) = (model.nx(), ys.len());
    let mut out = vec![InfoStats::zeros(nx); n];
    for t in (1..n).rev() {
        // Update with measurement t.
        let (h, r) = (model.h(t), model.r(t));
        let mut resid = ys[t].clone();
        resid.sub_assign(model.d(t))?;
        let rinv_h = solve_spd(r, h)?;
        let rinv_v = solve_spd(r, &resid)?;
        let mut eta = Vector::zeros(nx);
        mat_tvec_into(h, &rinv_v, &mut eta)?;
        eta.add_assign(&out[t].eta)?;
        let mut jmat = Mat::zeros(nx, nx);
        mat_tmul_into(h, &rinv_h, &mut jmat)?;
        jmat.add_assign(&out[t].jmat)?;
        jmat.symmetrize();

        // Predict back through F_t, u_t, Q_t.
        let (f, u, q) = (model.f(t), model.u(t), model.q(t));
        let mut m = mat_mul(&jmat, q)?;
        m.add_identity();
        let mut ju = Vector::zeros(nx);
        mat_vec_into(&jmat, u, &mut ju)?;
        let mut rhs_v = eta.clone();
        rhs_v.sub_assign(&ju)?;
        let x_v = solve(&m, &rhs_v)?;
        let x_m = solve(&m, &mat_mul(&jmat, f)?)?;
        let mut eta_prev = Vector::zeros(nx);
        mat_tvec_into(f, &x_v, &mut eta_prev)?;
        let mut j_prev = Mat::zeros(nx, nx);
        mat_tmul_into(f, &x_m, &mut j_prev)?;
        j_prev.symmetrize();
        out[t - 1] = InfoStats { eta: eta_prev, jmat: j_prev };
    }
    Ok(out)
}

/// Working buffers for [`tf_combine_into`].
pub(crate) struct TfScratch<S: Scalar> {
    m: Mat<S>,
    piv: Vec<usize>,
    pe: Vector<S>,
}

impl<S: Scalar> TfScratch<S> {
    pub(crate) fn new(nx: usize) -> Self {
        TfScratch { m: Mat::zeros(nx, nx), piv: vec![0; nx], pe: Vector::zeros(nx) }
    }
}

pub(crate) fn tf_combine_into<S: Scalar>(
    filtered: &GaussianStats<S>,
    info: &InfoStats<S>,
    out: &mut GaussianStats<S>,
    sc: &mut TfScratch<S>,
) -> Result<()> {
    mat_mul_into(&filtered.cov, &info.jmat, &mut sc.m)?;
    sc.m.add_identity();
    lu_in_place(&mut sc.m, &mut sc.piv)?;
    mat_vec_into(&filtered.cov, &info.eta, &mut sc.pe)?;
    out.mean.copy_from(&filtered.mean)?;
    out.mean.add_assign(&sc.pe)?;
    lu_solve_in_place(&sc.m, &sc.piv, &mut out.mean)?;
    out.cov.copy_from(&filtered.cov)?;
    lu_solve_in_place(&sc.m, &sc.piv, &mut out.cov)?;
    out.cov.symmetrize();
    Ok(())
}

/// Fuses forward filtered statistics with backward information:
/// `(I + P J)⁻¹ (m + P η)` and `(I + P J)⁻¹ P`.
pub fn tf_combine<S: Scalar>(filtered: &GaussianStats<S>, info: &InfoStats<S>) -> Result<GaussianStats<S>> {
    let nx = filtered.mean.len();
    if info.eta.len() != nx || info.jmat.shape() != (nx, nx) || filtered.cov.shape() != (nx, nx) {
        return Err(Error::DimensionMismatch { op: "tf_combine", lhs: filtered.cov.shape(), rhs: info.jmat.shape() });
    }
    let mut out = GaussianStats::zeros(nx);
    tf_combine_into(filtered, info, &mut out, &mut TfScratch::new(nx))?;
    Ok(out)
}

/// Two-filter smoother: [`kf_run`] and [`bif_run`] fused step by step.
pub fn tfs_run<S: Scalar>(model: &Lgssm<S>, ys: &[Vector<S>]) -> Result<Vec<GaussianStats<S>>> {
    let filtered = kf_run(model, ys)?;
    let info = bif_run(model, ys)?;
    filtered.iter().zip(&info).map(|(f, i)| tf_combine(f, i)).collect()
}
