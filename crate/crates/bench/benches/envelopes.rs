use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gskor_bench::{grid, input};
use gskor_core::path_core::{dual_envelope, gamma_envelope, gamma_envelope_coarse};

fn envelopes(c: &mut Criterion) {
    let mut group = c.benchmark_group("envelopes");
    for steps in [1 << 12, 1 << 16, 1_000_000] {
        let g = grid(steps);
        let s = input(g);
        let phi = s.map(|v| 1.0 - v).unwrap();
        let psi = s.map(|v| -1.0 - v).unwrap();
        let a = s.map(|v| v - 0.5).unwrap();
        let b = s.map(|v| v + 0.5).unwrap();
        group.throughput(Throughput::Elements(steps as u64));
        group.bench_with_input(BenchmarkId::new("dual", steps), &steps, |bench, _| {
            bench.iter(|| dual_envelope(black_box(&phi), black_box(&psi)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gamma", steps), &steps, |bench, _| {
            bench.iter(|| gamma_envelope(black_box(&a), black_box(&b)).unwrap())
        });
        if steps % 16 == 0 {
            group.bench_with_input(BenchmarkId::new("gamma_coarse_16", steps), &steps, |bench, _| {
                bench.iter(|| gamma_envelope_coarse(black_box(&a), black_box(&b), 16).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, envelopes);
criterion_main!(benches);
