use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infladiff_bench::m3_patch;
use infladiff_core::*;
use std::hint::black_box;

fn bench_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for iterations in [6u32, 8, 10] {
        group.bench_with_input(
            BenchmarkId::from_parameter(iterations),
            &iterations,
            |b, &iters| {
                b.iter(|| {
                    let words = fixed_point_patch(3, iters).unwrap();
                    black_box(to_point_set(&words).unwrap().len())
                })
            },
        );
    }
    group.finish();
}

fn bench_pair_correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_pair_corr");
    group.sample_size(20);
    for tiles in [10_000u64, 100_000] {
        let patch = m3_patch(tiles);
        let r = patch.radius() - 16.0;
        group.bench_with_input(BenchmarkId::from_parameter(tiles), &patch, |b, patch| {
            b.iter(|| black_box(empirical_pair_corr(patch, r, 15.0).unwrap().entry_count()))
        });
    }
    group.finish();
}

fn bench_renorm_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("renorm_solve");
    group.sample_size(20);
    for rmax in [10.0f64, 30.0] {
        group.bench_with_input(BenchmarkId::from_parameter(rmax), &rmax, |b, &rmax| {
            b.iter(|| black_box(solve_renorm(3, rmax).unwrap().core_size))
        });
    }
    group.finish();
}

fn bench_diffraction_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("diffraction_grid");
    group.sample_size(10);
    let patch = m3_patch(4_000);
    let weights = WeightScheme::extinct(3);
    for grid_points in [2_000usize, 20_000] {
        let dk = 1e-4;
        let kmax = dk * (grid_points - 1) as f64;
        group.bench_with_input(
            BenchmarkId::from_parameter(grid_points),
            &grid_points,
            |b, _| {
                b.iter(|| {
                    let grid =
                        diffraction_grid(&patch, &weights, kmax, dk, 1_000.0).unwrap();
                    black_box(grid.intensities.len())
                })
            },
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_generation,
    bench_pair_correlation,
    bench_renorm_solve,
    bench_diffraction_grid
);
criterion_main!(benches);
