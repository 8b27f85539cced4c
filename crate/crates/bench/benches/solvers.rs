use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gskor_bench::{band, driver, grid, input};
use gskor_core::gsde::{solve_reflected, Coefficient, PicardOptions, SDECoefficients};
use gskor_core::{solve, solve_oracle};

fn skorokhod(c: &mut Criterion) {
    let mut group = c.benchmark_group("skorokhod");
    for steps in [1 << 10, 1 << 14] {
        let g = grid(steps);
        let s = input(g);
        let pair = band(g, 1.0);
        group.bench_with_input(BenchmarkId::new("solve", steps), &steps, |bench, _| {
            bench.iter(|| solve(black_box(&s), black_box(&pair)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("oracle", steps), &steps, |bench, _| {
            bench.iter(|| solve_oracle(black_box(&s), black_box(&pair)).unwrap())
        });
    }
    group.finish();
}

fn picard(c: &mut Criterion) {
    let mut group = c.benchmark_group("picard");
    group.sample_size(20);
    let coeffs = SDECoefficients::new(
        Coefficient::Affine { a: -1.0, b: 0.0 },
        Coefficient::Zero,
        Coefficient::Constant(1.0),
        1.0,
        1.0,
    )
    .unwrap();
    for steps in [1 << 10, 1 << 12] {
        let g = grid(steps);
        let path = driver(g, 7);
        let pair = band(g, 0.5);
        let opts = PicardOptions::default();
        group.bench_with_input(BenchmarkId::new("solve_reflected", steps), &steps, |bench, _| {
            bench.iter(|| solve_reflected(0.0, &coeffs, black_box(&pair), black_box(&path), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, skorokhod, picard);
criterion_main!(benches);
