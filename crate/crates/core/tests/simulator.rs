use parascan_core::gen::{gen_model, simulate_data};
use parascan_core::kalman_par::Method;
use parascan_core::matcore::{with_flop_counting, FlopTally};
use parascan_core::scan::{ScanAlgorithm, DEFAULT_SENGUPTA_N};
use parascan_core::simhw::{estimate_time, replay_time, simulate_scan, SimConfig, UnitCosts};

const PARALLEL: [Method; 3] = [Method::Pkf, Method::Prts, Method::Ptfs];

#[test]
fn replay_matches_exact_run() {
    let costs = UnitCosts::measure(3, 2).unwrap();
    for steps in [1, 2, 3, 5, 8, 13, 32] {
        let model = gen_model(steps as u64, 3, 2, steps).unwrap();
        let ys = simulate_data(&model, 99);
        for alg in ScanAlgorithm::parallel(3) {
            for p in [1, 3, 8, 64] {
                for devices in [1, 2] {
                    let cfg = SimConfig::new(p, devices).unwrap();
                    for m in PARALLEL {
                        let exact = estimate_time(m, alg, &model, &ys, cfg).unwrap();
                        let replay = replay_time(m, alg, steps, &costs, cfg).unwrap();
                        assert_eq!(exact, replay, "{m} {alg} T={steps} P={p} devices={devices}");
                    }
                }
            }
        }
    }
}

#[test]
fn sequential_replay_matches_exact_run() {
    let costs = UnitCosts::measure(4, 2).unwrap();
    let cfg = SimConfig::new(16, 1).unwrap();
    for steps in 1..10 {
        let model = gen_model(5, 4, 2, steps).unwrap();
        let ys = simulate_data(&model, 5);
        for m in [Method::SeqKf, Method::SeqRts, Method::SeqTfs] {
            let exact = estimate_time(m, ScanAlgorithm::Sequential, &model, &ys, cfg).unwrap();
            let replay = replay_time(m, ScanAlgorithm::Sequential, steps, &costs, cfg).unwrap();
            assert_eq!(exact, replay, "{m} T={steps}");
            assert_eq!(exact.time_units, exact.work_units);
        }
    }
}

#[test]
fn no_flops_outside_launches() {
    let model = gen_model(1, 4, 2, 20).unwrap();
    let ys = simulate_data(&model, 1);
    for m in PARALLEL {
        let (r, outer) = with_flop_counting(|| estimate_time(m, ScanAlgorithm::Blelloch, &model, &ys, SimConfig::new(4, 1).unwrap()));
        assert_eq!(r.unwrap().work_units, outer.total(), "{m}");
    }
}

#[test]
fn single_thread_time_equals_work() {
    let model = gen_model(2, 4, 2, 37).unwrap();
    let ys = simulate_data(&model, 2);
    for alg in ScanAlgorithm::parallel(4) {
        for m in PARALLEL {
            let r = estimate_time(m, alg, &model, &ys, SimConfig::new(1, 1).unwrap()).unwrap();
            assert_eq!(r.time_units, r.work_units, "{m} {alg}");
        }
    }
}

#[test]
fn sandwich_bound_on_method_runs() {
    let costs = UnitCosts::measure(4, 2).unwrap();
    for alg in ScanAlgorithm::parallel(DEFAULT_SENGUPTA_N) {
        for steps in [1, 100, 5000] {
            for p in [1, 7, 256, 15000] {
                for m in PARALLEL {
                    let r = replay_time(m, alg, steps, &costs, SimConfig::new(p, 1).unwrap()).unwrap();
                    assert!(r.time_units <= r.work_units);
                    assert!(r.work_units <= r.time_units * p as u64);
                }
                let two = replay_time(Method::Ptfs, alg, steps, &costs, SimConfig::new(p, 2).unwrap()).unwrap();
                assert!(two.time_units <= two.work_units);
                assert!(two.work_units <= two.time_units * 2 * p as u64);
            }
        }
    }
}

#[test]
fn work_does_not_depend_on_threads() {
    let costs = UnitCosts::measure(4, 2).unwrap();
    for m in PARALLEL {
        let works: Vec<u64> = [1, 5, 100, 10_000]
            .into_iter()
            .map(|p| replay_time(m, ScanAlgorithm::InplaceLaFi, 3000, &costs, SimConfig::new(p, 1).unwrap()).unwrap().work_units)
            .collect();
        assert!(works.windows(2).all(|w| w[0] == w[1]), "{m}");
    }
}

#[test]
fn time_non_increasing_in_threads() {
    let costs = UnitCosts::measure(4, 2).unwrap();
    for alg in ScanAlgorithm::parallel(64) {
        for m in PARALLEL {
            let times: Vec<u64> = (0..14)
                .map(|e| replay_time(m, alg, 3000, &costs, SimConfig::new(1 << e, 1).unwrap()).unwrap().time_units)
                .collect();
            assert!(times.windows(2).all(|w| w[1] <= w[0]), "{m} {alg} {times:?}");
        }
    }
}

#[test]
fn single_step_two_devices_no_gain() {
    let costs = UnitCosts::measure(4, 2).unwrap();
    let one = replay_time(Method::Ptfs, ScanAlgorithm::Blelloch, 1, &costs, SimConfig::new(8, 1).unwrap()).unwrap();
    let two = replay_time(Method::Ptfs, ScanAlgorithm::Blelloch, 1, &costs, SimConfig::new(8, 2).unwrap()).unwrap();
    let max_launch = one.launches.iter().map(|l| l.max_thread_flops).max().unwrap();
    assert!(one.time_units.abs_diff(two.time_units) <= max_launch);
}

#[test]
fn unit_cost_scan_work_closed_forms() {
    for e in 1..=10 {
        let t = 1usize << e;
        let l = e as u64;
        let t64 = t as u64;
        let w = |alg| simulate_scan(alg, t, FlopTally::adds(1), 1).unwrap().work_units;
        assert_eq!(w(ScanAlgorithm::HillisSteele), t64 * l - t64 + 1);
        assert_eq!(w(ScanAlgorithm::Blelloch), 3 * t64 - 2);
        assert_eq!(w(ScanAlgorithm::InplaceLaFi), 2 * t64 - 2 - l);
    }
}
