use std::f64::consts::E;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ouexec_core::continuous::{p_inverse, schedule, solve_lambda_star, SolveOptions};
use ouexec_core::discrete::{solve, DiscreteProblem};
use ouexec_core::montecarlo::simulate;
use ouexec_core::{expected_proceeds, MarketState, Mode, ModelParams};

fn instance() -> (ModelParams, MarketState) {
    (ModelParams::new(1.0, 1.0, 0.2, 0.0, 1.0).unwrap(), MarketState::new(0.0, 3.0, E).unwrap())
}

fn bench_p_inverse(c: &mut Criterion) {
    c.bench_function("p_inverse", |b| {
        b.iter(|| (0..100).map(|i| p_inverse(1.0, black_box(i as f64 * 0.05)).unwrap()).sum::<f64>())
    });
}

fn bench_lambda_star(c: &mut Criterion) {
    let (p, s) = instance();
    c.bench_function("lambda_star", |b| b.iter(|| solve_lambda_star(black_box(&p), &s, Mode::Standard).unwrap()));
}

fn bench_discrete(c: &mut Criterion) {
    let (p, s) = instance();
    let mut group = c.benchmark_group("discrete_solve");
    group.sample_size(10);
    for n in [100, 1000] {
        let problem = DiscreteProblem::new(p, s, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &problem, |b, pr| b.iter(|| solve(pr).unwrap()));
    }
    group.finish();
}

fn bench_proceeds(c: &mut Criterion) {
    let (p, s) = instance();
    let strategy = schedule(&p, &s, &SolveOptions::default()).unwrap().strategy().unwrap();
    c.bench_function("expected_proceeds_1000_cells", |b| {
        b.iter(|| expected_proceeds(black_box(&p), &s, &strategy).unwrap())
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let (p, s) = instance();
    let strategy = schedule(&p, &s, &SolveOptions { cells: 100, ..SolveOptions::default() }).unwrap().strategy().unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("1000_paths_100_steps", |b| b.iter(|| simulate(&p, &s, &strategy, 1000, 100, 7).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_p_inverse, bench_lambda_star, bench_discrete, bench_proceeds, bench_monte_carlo);
criterion_main!(benches);
