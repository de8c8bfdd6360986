use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use parascan_core::gen::gen_model;
use parascan_core::matcore::Mat;
use parascan_core::scan::{scan_vec, MatMulOp, PoolBackend, ScanAlgorithm, DEFAULT_SENGUPTA_N};

fn matmul_scans(c: &mut Criterion) {
    let pool = PoolBackend::new(std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap();
    let t = 1 << 14;
    let model = gen_model(0, 4, 1, t).unwrap();
    let mats: Vec<Mat<f64>> = (0..t).map(|k| model.f(k).clone()).collect();
    let op = MatMulOp::<f64>::new(4);
    let mut g = c.benchmark_group("matmul_scan_4x4");
    g.throughput(Throughput::Elements(t as u64));
    g.sample_size(20);
    for alg in ScanAlgorithm::parallel(DEFAULT_SENGUPTA_N) {
        g.bench_with_input(BenchmarkId::from_parameter(alg), &alg, |b, &alg| {
            b.iter(|| scan_vec(alg, false, &op, &pool, mats.clone()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, matmul_scans);
criterion_main!(benches);
