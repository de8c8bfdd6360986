use parascan_core::compare::rel_err_mat;
use parascan_core::matcore::Mat;
use parascan_core::scan::{
    count_work_and_span, scan_sequential, scan_vec, AddOp, MatMulOp, PoolBackend, ScanAlgorithm, SerialBackend,
};
use proptest::prelude::*;

fn any_alg() -> impl Strategy<Value = ScanAlgorithm> {
    prop_oneof![
        Just(ScanAlgorithm::HillisSteele),
        Just(ScanAlgorithm::Blelloch),
        Just(ScanAlgorithm::InplaceLaFi),
        Just(ScanAlgorithm::SenguptaA),
        (2usize..200).prop_map(ScanAlgorithm::SenguptaB),
    ]
}

fn suffix(xs: &[i64]) -> Vec<i64> {
    let mut rev: Vec<i64> = xs.iter().rev().copied().collect();
    scan_sequential(&AddOp, &mut rev);
    rev.reverse();
    rev
}

proptest! {
    #[test]
    fn integer_scans_agree(xs in prop::collection::vec(any::<i64>(), 1..300), alg in any_alg()) {
        let mut want = xs.clone();
        scan_sequential(&AddOp, &mut want);
        prop_assert_eq!(scan_vec(alg, false, &AddOp, &SerialBackend, xs.clone()).unwrap(), want);
        prop_assert_eq!(scan_vec(alg, true, &AddOp, &SerialBackend, xs.clone()).unwrap(), suffix(&xs));
    }

    #[test]
    fn pool_results_are_bit_identical(
        seed in any::<u64>(),
        len in 1usize..200,
        workers in 1usize..6,
        alg in any_alg(),
    ) {
        let op = MatMulOp::<f64>::new(3);
        let elems: Vec<Mat<f64>> = (0..len)
            .map(|k| Mat::from_fn(3, 3, |i, j| ((seed.wrapping_add((k * 9 + i * 3 + j) as u64) % 1000) as f64) / 1000.0 - 0.5))
            .collect();
        let pool = PoolBackend::new(workers).unwrap();
        let a = scan_vec(alg, false, &op, &SerialBackend, elems.clone()).unwrap();
        let b = scan_vec(alg, false, &op, &pool, elems).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn matrix_scans_agree(
        entries in prop::collection::vec(-1.0f64..1.0, 4..400),
        alg in any_alg(),
    ) {
        let elems: Vec<Mat<f64>> = entries.chunks_exact(4).map(|c| Mat::from_fn(2, 2, |i, j| c[2 * i + j])).collect();
        let op = MatMulOp::<f64>::new(2);
        let mut want = elems.clone();
        scan_sequential(&op, &mut want);
        let got = scan_vec(alg, false, &op, &SerialBackend, elems).unwrap();
        for (g, w) in got.iter().zip(&want) {
            // Products of contractions can underflow to tiny values; compare against a unit floor.
            let scale = w.max_abs().max(1.0);
            prop_assert!(rel_err_mat(g, w) * w.max_abs().max(f64::MIN_POSITIVE) <= 1e-12 * scale);
        }
    }

    #[test]
    fn work_and_span_bounds(e in 1u32..12, alg in any_alg()) {
        let t = 1usize << e;
        let ws = count_work_and_span(alg, t).unwrap();
        prop_assert!(ws.span_levels as usize <= ws.work as usize);
        prop_assert!(ws.work as usize >= t - 1);
        prop_assert!(ws.span_levels >= e as u64);
    }
}

#[test]
fn lafi_saves_two_launches() {
    for e in 2..=10 {
        let t = 1usize << e;
        let b = count_work_and_span(ScanAlgorithm::Blelloch, t).unwrap();
        let l = count_work_and_span(ScanAlgorithm::InplaceLaFi, t).unwrap();
        assert_eq!(l.span_levels + 2, b.span_levels, "T={t}");
    }
}
