//! Normwise relative errors used by every oracle comparison.

use crate::kalman_seq::GaussianStats;
use crate::matcore::{Mat, Scalar, Vector};

/// Floor for the reference norm so all-zero references compare absolutely.
pub const TINY: f64 = 1e-300;

fn rel(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (x, y) in a.zip(b) {
        let d = (x - y).abs();
        // NaN must not compare as small.
        diff = if d.is_nan() { f64::INFINITY } else { diff.max(d) };
        scale = scale.max(y.abs());
    }
    diff / scale.max(TINY)
}

/// `‖a − b‖_max / ‖b‖_max`.
pub fn rel_err_mat<S: Scalar, T: Scalar>(a: &Mat<S>, b: &Mat<T>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    rel(a.as_slice().iter().map(|v| v.to_f64()), b.as_slice().iter().map(|v| v.to_f64()))
}

/// `‖a − b‖_max / ‖b‖_max`.
pub fn rel_err_vec<S: Scalar, T: Scalar>(a: &Vector<S>, b: &Vector<T>) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    rel(a.as_slice().iter().map(|v| v.to_f64()), b.as_slice().iter().map(|v| v.to_f64()))
}

/// Largest relative error over steps, means and covariances measured separately.
/// `reference` is the denominator. Different lengths compare as infinitely far.
pub fn max_rel_err<S: Scalar, T: Scalar>(a: &[GaussianStats<S>], reference: &[GaussianStats<T>]) -> f64 {
    if a.len() != reference.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(reference)
        .map(|(x, y)| rel_err_vec(&x.mean, &y.mean).max(rel_err_mat(&x.cov, &y.cov)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_to_reference() {
        let a = Vector::<f64>::from_slice(&[1.0, 2.0]);
        let b = Vector::<f64>::from_slice(&[1.0, 4.0]);
        assert_eq!(rel_err_vec(&a, &b), 0.5);
        assert_eq!(rel_err_vec(&b, &b), 0.0);
        let z = Vector::<f64>::zeros(2);
        assert_eq!(rel_err_vec(&z, &z), 0.0);
    }

    #[test]
    fn nan_is_never_close() {
        let a = Vector::<f64>::from_slice(&[f64::NAN]);
        let b = Vector::<f64>::from_slice(&[1.0]);
        assert!(rel_err_vec(&a, &b).is_infinite());
    }

    #[test]
    fn length_mismatch() {
        let g = GaussianStats::<f64>::zeros(1);
        assert!(max_rel_err(std::slice::from_ref(&g), &[g.clone(), g.clone()]).is_infinite());
    }
}
