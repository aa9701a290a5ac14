use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use infogeo_bench::{manhattan_5x5, moore_7x7};
use infogeo_core::{
    live_distribution, mds_embed, solve, symmetrize, value_distance_matrix, value_iteration,
    GridSpec, MdsConfig, Neighborhood, Policy, SolverConfig,
};

fn bench_value_iteration(c: &mut Criterion) {
    let mdp = moore_7x7(6);
    c.bench_function("value_iteration/7x7_moore", |b| {
        b.iter(|| value_iteration(black_box(&mdp), 1e-9).unwrap())
    });
}

fn bench_live_distribution(c: &mut Criterion) {
    let mdp = moore_7x7(6);
    let policy = Policy::uniform(49, 8);
    c.bench_function("live_distribution/7x7_uniform", |b| {
        b.iter(|| live_distribution(black_box(&mdp), black_box(&policy)).unwrap())
    });
}

fn bench_solve(c: &mut Criterion) {
    let fast = manhattan_5x5(12);
    let config = SolverConfig::new(100.0).unwrap();
    c.bench_function("solve/5x5_beta100", |b| {
        b.iter(|| solve(black_box(&fast), black_box(&config)).unwrap())
    });
    let slow = moore_7x7(6);
    let low_beta = SolverConfig::new(1.0).unwrap();
    c.bench_function("solve/7x7_beta1", |b| {
        b.iter(|| solve(black_box(&slow), black_box(&low_beta)).unwrap())
    });
}

fn bench_mds(c: &mut Criterion) {
    let spec = GridSpec::new(7, 7, Neighborhood::Moore, 0).unwrap();
    let d = symmetrize(&value_distance_matrix(&spec).unwrap());
    let config = MdsConfig::new(2, 0).unwrap();
    c.bench_function("mds_embed/7x7_hops", |b| {
        b.iter(|| mds_embed(black_box(&d), black_box(&config)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_value_iteration,
    bench_live_distribution,
    bench_solve,
    bench_mds
);
criterion_main!(benches);
