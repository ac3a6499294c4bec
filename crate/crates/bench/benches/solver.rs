use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vos_bench::noisy_square;
use vos_core::models::{self, ModelName, PresetOverrides};
use vos_core::{solve, SolverConfig};

/// A fixed number of iterations, so the timing is per-iteration cost.
fn fixed_iterations(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver_100_iterations");
    g.sample_size(10);
    let cfg = SolverConfig::default().with_tolerance(1e-300).with_max_iters(100);
    for n in [64, 128] {
        let f = noisy_square(n);
        let beta = models::preset(ModelName::TgvSym, &PresetOverrides::default()).unwrap();
        g.bench_with_input(BenchmarkId::new("vos_tgv", n), &f, |b, f| {
            b.iter(|| solve(black_box(f), &beta, &cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("rof", n), &f, |b, f| {
            b.iter(|| models::solve_tv_reference(black_box(f), 0.25, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fixed_iterations);
criterion_main!(benches);
