use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use uscqed::model::ModelParams;
use uscqed::par::Execution;
use uscqed::scenario::{perturbation_table, spectrum_table};

fn couplings(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.01 + 0.49 * k as f64 / (n - 1) as f64).collect()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn perturbation(c: &mut Criterion) {
    let params = ModelParams::default();
    let grid = couplings(32);
    let mut group = c.benchmark_group("perturbation_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &grid, |b, grid| {
            b.iter(|| perturbation_table(&params, 20, black_box(grid), exec).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let params = ModelParams::default();
    let grid = couplings(64);
    let mut group = c.benchmark_group("spectrum_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &grid, |b, grid| {
            b.iter(|| spectrum_table(&params, 30, black_box(grid), 8, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, perturbation, spectrum);
criterion_main!(benches);
