use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use parascan_core::gen::{gen_model, simulate_data};
use parascan_core::kalman_par::{Devices, Method};
use parascan_core::matcore::Vector;
use parascan_core::scan::{PoolBackend, ScanAlgorithm, SerialBackend};

fn methods(c: &mut Criterion) {
    let pool = PoolBackend::new(std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap();
    let mut g = c.benchmark_group("kalman_f32");
    g.sample_size(10);
    for t in [1 << 10, 1 << 13] {
        let model = gen_model(1, 4, 2, t).unwrap();
        let ys = simulate_data(&model, 1);
        let m32 = model.cast::<f32>();
        let y32: Vec<Vector<f32>> = ys.iter().map(|y| y.cast()).collect();
        g.throughput(Throughput::Elements(t as u64));
        for m in Method::ALL {
            let (alg, devices) = if m.is_parallel() {
                (ScanAlgorithm::InplaceLaFi, Devices::One(&pool))
            } else {
                (ScanAlgorithm::Sequential, Devices::One(&SerialBackend))
            };
            g.bench_with_input(BenchmarkId::new(m.name(), t), &t, |b, _| {
                b.iter(|| m.run(&m32, &y32, alg, devices).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, methods);
criterion_main!(benches);
