//! Random models and simulated measurements.
//!
//! Every draw comes from ChaCha8 seeded with the user seed. Each `(k, role)`
//! pair gets its own stream `16·k + role`, so a step's matrices do not depend
//! on how many steps the model has. Normal deviates use `rand_distr`'s
//! ziggurat sampler.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kalman_seq::{Lgssm, StepParams};
use crate::matcore::{mat_mult_into, mat_vec_into, qr_qfactor, Mat, Vector};

/// Jitter added to every `Ξ Ξᵀ` draw.
pub const SPD_JITTER: f64 = 1e-6;

/// Spectral norm of every generated transition matrix.
pub const TRANSITION_SCALE: f64 = 0.99;

#[derive(Clone, Copy)]
enum Role {
    F = 0,
    U = 1,
    Q = 2,
    H = 3,
    D = 4,
    R = 5,
    PriorMean = 6,
    PriorCov = 7,
    ProcessNoise = 8,
    MeasurementNoise = 9,
    InitialState = 10,
}

fn stream(seed: u64, k: usize, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(16 * k as u64 + role as u64);
    rng
}

fn gaussian_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vector<f64> {
    Vector::from_fn(len, |_| StandardNormal.sample(rng))
}

/// `Ξ Ξᵀ + εI` with a standard normal `n × n` matrix `Ξ`.
fn spd(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let xi = gaussian_mat(rng, n, n);
    let mut out = Mat::zeros(n, n);
    mat_mult_into(&xi, &xi, &mut out).expect("square");
    out.symmetrize();
    for i in 0..n {
        out[(i, i)] += SPD_JITTER;
    }
    out
}

fn transition(rng: &mut ChaCha8Rng, n: usize) -> Result<Mat<f64>> {
    // A Gaussian matrix is rank deficient with probability zero; retry anyway.
    for _ in 0..8 {
        match qr_qfactor(&gaussian_mat(rng, n, n)) {
            Ok(mut q) => {
                q.as_mut_slice().iter_mut().for_each(|v| *v *= TRANSITION_SCALE);
                return Ok(q);
            }
            Err(Error::Degenerate { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidModel("could not draw a full-rank transition matrix".into()))
}

/// Random time-varying model with `steps` steps.
pub fn gen_model(seed: u64, nx: usize, ny: usize, steps: usize) -> Result<Lgssm<f64>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidConfig("state and measurement dimensions must be positive".into()));
    }
    let params = (0..steps)
        .map(|k| {
            Ok(StepParams {
                f: transition(&mut stream(seed, k, Role::F), nx)?,
                u: gaussian_vec(&mut stream(seed, k, Role::U), nx),
                q: spd(&mut stream(seed, k, Role::Q), nx),
                h: gaussian_mat(&mut stream(seed, k, Role::H), ny, nx),
                d: gaussian_vec(&mut stream(seed, k, Role::D), ny),
                r: spd(&mut stream(seed, k, Role::R), ny),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = gaussian_vec(&mut stream(seed, 0, Role::PriorMean), nx);
    let p0 = spd(&mut stream(seed, 0, Role::PriorCov), nx);
    Lgssm::new(params, m0, p0)
}

/// Lower factor `L` with `L Lᵀ = a` for positive semidefinite `a`; columns
/// with a non-positive pivot are zeroed.
fn psd_factor(a: &Mat<f64>) -> Mat<f64> {
    let n = a.rows();
    let tol = 1e-14 * a.max_abs().max(f64::MIN_POSITIVE);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            continue;
        }
        let piv = d.sqrt();
        l[(j, j)] = piv;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / piv;
        }
    }
    l
}

fn sample(rng: &mut ChaCha8Rng, mean: &Vector<f64>, chol: &Mat<f64>) -> Vector<f64> {
    let z = gaussian_vec(rng, mean.len());
    let mut out = Vector::zeros(mean.len());
    mat_vec_into(chol, &z, &mut out).expect("same size");
    out.add_assign(mean).expect("same size");
    out
}

/// Latent states and measurements drawn from the model.
pub fn simulate(model: &Lgssm<f64>, seed: u64) -> (Vec<Vector<f64>>, Vec<Vector<f64>>) {
    let mut x = sample(&mut stream(seed, 0, Role::InitialState), model.prior_mean(), &psd_factor(model.prior_cov()));
    let mut xs = Vec::with_capacity(model.steps());
    let mut ys = Vec::with_capacity(model.steps());
    let mut fx = Vector::zeros(model.nx());
    let mut hx = Vector::zeros(model.ny());
    for k in 0..model.steps() {
        mat_vec_into(model.f(k), &x, &mut fx).expect("valid model");
        fx.add_assign(model.u(k)).expect("valid model");
        x = sample(&mut stream(seed, k, Role::ProcessNoise), &fx, &psd_factor(model.q(k)));
        mat_vec_into(model.h(k), &x, &mut hx).expect("valid model");
        hx.add_assign(model.d(k)).expect("valid model");
        ys.push(sample(&mut stream(seed, k, Role::MeasurementNoise), &hx, &psd_factor(model.r(k))));
        xs.push(x.clone());
    }
    (xs, ys)
}

/// Measurements drawn from the model.
pub fn simulate_data(model: &Lgssm<f64>, seed: u64) -> Vec<Vector<f64>> {
    simulate(model, seed).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_model() {
        let a = gen_model(7, 4, 2, 20).unwrap();
        let b = gen_model(7, 4, 2, 20).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_model(8, 4, 2, 20).unwrap());
    }

    #[test]
    fn steps_do_not_depend_on_length() {
        let short = gen_model(3, 3, 2, 5).unwrap();
        let long = gen_model(3, 3, 2, 50).unwrap();
        assert_eq!(short, long.truncated(5).unwrap());
    }

    #[test]
    fn noiseless_static_model_repeats_initial_state() {
        let params = StepParams {
            f: Mat::identity(2),
            u: Vector::zeros(2),
            q: Mat::zeros(2, 2),
            h: Mat::identity(2),
            d: Vector::zeros(2),
            r: Mat::zeros(2, 2),
        };
        let x0 = Vector::from_slice(&[1.5, -0.25]);
        let m = Lgssm::constant(10, params, x0.clone(), Mat::zeros(2, 2)).unwrap();
        let ys = simulate_data(&m, 11);
        assert!(ys.iter().all(|y| *y == x0));
    }

    #[test]
    fn psd_factor_reconstructs() {
        let mut rng = stream(1, 0, Role::Q);
        let a = spd(&mut rng, 4);
        let l = psd_factor(&a);
        let mut back = Mat::zeros(4, 4);
        mat_mult_into(&l, &l, &mut back).unwrap();
        let mut diff = back.clone();
        diff.sub_assign(&a).unwrap();
        assert!(diff.max_abs() < 1e-12 * a.max_abs());
        // Rank one: second column vanishes.
        let r1 = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let l = psd_factor(&r1);
        let mut back = Mat::zeros(2, 2);
        crate::matcore::mat_mul_into(&l, &l.transpose(), &mut back).unwrap();
        assert!((back[(1, 1)] - 4.0).abs() < 1e-12 && l[(1, 1)] == 0.0);
    }
}
