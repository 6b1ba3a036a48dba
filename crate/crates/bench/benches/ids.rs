use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rdm_core::ids::{dos_histogram, estimate_ids, linear_grid, IdsParams};
use rdm_core::ids::walk::walk_statistics;

fn ids(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_ids");
    g.sample_size(10);
    let grid = linear_grid(-2.5, 3.5, 100);
    for l in [100, 400] {
        let params = IdsParams::new(1.0, 0.5, l, 200, 1);
        g.bench_with_input(BenchmarkId::from_parameter(l), &params, |b, p| {
            b.iter(|| estimate_ids(p, &grid).unwrap())
        });
    }
    g.finish();
}

fn dos(c: &mut Criterion) {
    let mut g = c.benchmark_group("dos_histogram");
    g.sample_size(10);
    let params = IdsParams::new(3.0, 0.5, 100, 100, 1);
    g.bench_function("L100_bins200", |b| b.iter(|| dos_histogram(&params, 200).unwrap()));
    g.finish();
}

fn walk(c: &mut Criterion) {
    let mut g = c.benchmark_group("walk");
    g.sample_size(10);
    g.bench_function("L400_trials20000", |b| b.iter(|| walk_statistics(400, 20_000, 1).unwrap()));
    g.finish();
}

criterion_group!(benches, ids, dos, walk);
criterion_main!(benches);
