use super::*;
use crate::kalman_seq::{bif_run, StepParams};
use crate::matcore::Mat;
use crate::scan::{PoolBackend, SerialBackend};

fn scalar_model(steps: usize, f: f64, q: f64, h: f64, r: f64, m0: f64, p0: f64) -> Lgssm<f64> {
    let params = StepParams {
        f: Mat::from_rows(&[&[f]]),
        u: Vector::zeros(1),
        q: Mat::from_rows(&[&[q]]),
        h: Mat::from_rows(&[&[h]]),
        d: Vector::zeros(1),
        r: Mat::from_rows(&[&[r]]),
    };
    Lgssm::constant(steps, params, Vector::from_slice(&[m0]), Mat::from_rows(&[&[p0]])).unwrap()
}

fn y(v: f64) -> Vector<f64> {
    Vector::from_slice(&[v])
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn first_filter_element_folds_in_prior() {
    // P0 = 1, F = Q = H = R = 1: predicted variance 2, so gain 2/3.
    let m = scalar_model(2, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    let e = make_filter_element(&m, 0, &y(1.0)).unwrap();
    assert!(close(e.a[(0, 0)], 0.0));
    assert!(close(e.b[0], 2.0 / 3.0));
    assert!(close(e.c[(0, 0)], 2.0 / 3.0));
    assert!(close(e.eta[0], 1.0 / 3.0));
    assert!(close(e.jmat[(0, 0)], 1.0 / 3.0));
}

#[test]
fn later_filter_element_conditions_on_previous_state() {
    let m = scalar_model(2, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    let e = make_filter_element(&m, 1, &y(0.0)).unwrap();
    assert!(close(e.a[(0, 0)], 0.5));
    assert!(close(e.b[0], 0.0));
    assert!(close(e.c[(0, 0)], 0.5));
    assert!(close(e.eta[0], 0.0));
    assert!(close(e.jmat[(0, 0)], 0.5));
}

#[test]
fn uninformative_measurement_gives_transition() {
    let m = scalar_model(3, 0.7, 0.3, 0.0, 1.0, 0.0, 1.0);
    let e = make_filter_element(&m, 2, &y(5.0)).unwrap();
    assert!(close(e.a[(0, 0)], 0.7));
    assert!(close(e.b[0], 0.0));
    assert!(close(e.c[(0, 0)], 0.3));
    assert!(close(e.eta[0], 0.0));
    assert!(close(e.jmat[(0, 0)], 0.0));
}

#[test]
fn smoother_element_hand_values() {
    let m = scalar_model(2, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    let x = 0.8;
    let f = GaussianStats::new(y(x), Mat::from_rows(&[&[1.0]]));
    let e = make_smoother_element(&m, &f, 0, 2).unwrap();
    assert!(close(e.e[(0, 0)], 0.5));
    assert!(close(e.g[0], x / 2.0));
    assert!(close(e.l[(0, 0)], 0.5));

    let last = make_smoother_element(&m, &f, 1, 2).unwrap();
    assert_eq!(last.e[(0, 0)], 0.0);
    assert_eq!(last.g[0], x);
    assert_eq!(last.l[(0, 0)], 1.0);
}

#[test]
fn smoother_element_with_vanishing_noise() {
    let params = StepParams {
        f: Mat::from_rows(&[&[0.9, 0.1], &[0.0, 0.8]]),
        u: Vector::zeros(2),
        q: Mat::diag(&[1e-9, 1e-9]),
        h: Mat::from_rows(&[&[1.0, 0.0]]),
        d: Vector::zeros(1),
        r: Mat::diag(&[1.0]),
    };
    let m = Lgssm::constant(2, params, Vector::zeros(2), Mat::diag(&[1.0, 1.0])).unwrap();
    let f = GaussianStats::new(Vector::from_slice(&[0.3, -0.2]), Mat::from_rows(&[&[1.0, 0.2], &[0.2, 0.5]]));
    let e = make_smoother_element(&m, &f, 0, 2).unwrap();
    // E F → I as Q → 0; with invertible F, E → F⁻¹.
    let ef: Mat<f64> = crate::matcore::mat_mul(&e.e, m.f(1)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want: f64 = if i == j { 1.0 } else { 0.0 };
            assert!((ef[(i, j)] - want).abs() < 1e-4);
            assert!(e.l[(i, j)].abs() < 1e-4);
        }
        assert!(e.g[i].abs() < 1e-4);
    }
}

#[test]
fn identities_are_neutral() {
    let m = scalar_model(4, 0.9, 0.4, 1.3, 0.6, 0.2, 1.5);
    let op = FilterOp::new(1);
    let a = make_filter_element(&m, 2, &y(0.7)).unwrap();
    let e = filter_identity(1);
    assert_eq!(op.apply(&e, &a), a);
    assert_eq!(op.apply(&a, &e), a);

    let sop = SmootherOp::new(1);
    let f = GaussianStats::new(y(0.1), Mat::from_rows(&[&[0.7]]));
    let s = make_smoother_element(&m, &f, 1, 4).unwrap();
    let se = smoother_identity(1);
    assert_eq!(sop.apply(&se, &s), s);
    assert_eq!(sop.apply(&s, &se), s);
}

#[test]
fn parallel_methods_match_sequential_scalar() {
    let m = scalar_model(13, 0.95, 0.2, 1.0, 0.5, 0.1, 2.0);
    let ys: Vec<_> = (0..13).map(|k| y((k as f64 * 0.7).sin())).collect();
    let kf = kf_run(&m, &ys).unwrap();
    let rts = rts_run(&m, &kf).unwrap();
    let pool = PoolBackend::new(3).unwrap();
    for alg in ScanAlgorithm::parallel(3) {
        let pkf = pkf_run(&m, &ys, alg, &pool).unwrap();
        let prts = prts_run(&m, &ys, alg, &pool).unwrap();
        let ptfs1 = ptfs_run(&m, &ys, alg, Devices::One(&pool)).unwrap();
        let ptfs2 = ptfs_run(&m, &ys, alg, Devices::Two(&pool, &SerialBackend)).unwrap();
        for t in 0..13 {
            assert!((pkf[t].mean[0] - kf[t].mean[0]).abs() < 1e-10, "{alg} {t}");
            assert!((pkf[t].cov[(0, 0)] - kf[t].cov[(0, 0)]).abs() < 1e-10);
            assert!((prts[t].mean[0] - rts[t].mean[0]).abs() < 1e-10);
            assert!((prts[t].cov[(0, 0)] - rts[t].cov[(0, 0)]).abs() < 1e-10);
            assert!((ptfs1[t].mean[0] - rts[t].mean[0]).abs() < 1e-10);
            assert!((ptfs1[t].cov[(0, 0)] - rts[t].cov[(0, 0)]).abs() < 1e-10);
        }
        assert_eq!(ptfs1, ptfs2);
    }
}

#[test]
fn backward_pass_matches_information_filter() {
    let m = scalar_model(9, 0.8, 0.3, 1.1, 0.4, 0.0, 1.0);
    let ys: Vec<_> = (0..9).map(|k| y(1.0 - 0.2 * k as f64)).collect();
    let bif = bif_run(&m, &ys).unwrap();
    let out = ptfs_run_detailed(&m, &ys, ScanAlgorithm::Blelloch, Devices::One(&SerialBackend)).unwrap();
    for (got, want) in out.backward.iter().zip(&bif) {
        assert!((got.eta[0] - want.eta[0]).abs() < 1e-12);
        assert!((got.jmat[(0, 0)] - want.jmat[(0, 0)]).abs() < 1e-12);
    }
}

#[test]
fn single_step_series() {
    let m = scalar_model(1, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    let ys = [y(1.0)];
    for alg in ScanAlgorithm::parallel(2) {
        let out = pkf_run(&m, &ys, alg, &SerialBackend).unwrap();
        assert!(close(out[0].mean[0], 2.0 / 3.0));
        let s = ptfs_run(&m, &ys, alg, Devices::One(&SerialBackend)).unwrap();
        assert!(close(s[0].mean[0], 2.0 / 3.0));
    }
}

#[test]
fn measurement_count_is_checked() {
    let m = scalar_model(3, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    assert!(pkf_run(&m, &[y(0.0)], ScanAlgorithm::Blelloch, &SerialBackend).is_err());
}

#[test]
fn bad_covariance_reports_error() {
    let m = scalar_model(4, 1.0, 1.0, 1.0, -5.0, 0.0, 1.0);
    let ys: Vec<_> = (0..4).map(|_| y(0.0)).collect();
    assert!(pkf_run(&m, &ys, ScanAlgorithm::Blelloch, &SerialBackend).is_err());
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("KF".parse::<Method>().is_err());
}
