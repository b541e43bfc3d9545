use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kyleback_core::deterministic::TimeGrid;
use kyleback_core::par::ExecMode;
use kyleback_core::presets;
use kyleback_core::simulation::{path_payoff, PathModel, Scheme};

fn model() -> PathModel {
    let cfg = presets::preset("g0_general").unwrap();
    let beta = cfg.resolve_strategy().unwrap();
    let grid = TimeGrid::graded(cfg.t_eff(), cfg.coefficients.horizon, 500, &[]);
    PathModel::new(&cfg.coefficients, &beta, grid).unwrap()
}

fn payoff_paths(c: &mut Criterion) {
    let base = model();
    let mut group = c.benchmark_group("closed_loop_payoff");
    group.sample_size(10);
    for n_paths in [256usize, 2048] {
        for (label, mode) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
            let m = base.clone().with_mode(mode);
            group.bench_with_input(BenchmarkId::new(label, n_paths), &n_paths, |b, &n| {
                b.iter(|| {
                    let out = m
                        .run(Scheme::ClosedLoop, n, 1, |_, p| path_payoff(m.beta(), &m.grid, p))
                        .unwrap();
                    black_box(out.iter().sum::<f64>())
                })
            });
        }
    }
    group.finish();
}

fn reference_paths(c: &mut Criterion) {
    let base = model();
    let mut group = c.benchmark_group("reference_weight");
    group.sample_size(10);
    for (label, mode) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
        let m = base.clone().with_mode(mode);
        group.bench_function(label, |b| {
            b.iter(|| {
                let out = m
                    .run(Scheme::Reference, 1024, 2, |_, p| *p.log_l.as_ref().unwrap().last().unwrap())
                    .unwrap();
                black_box(out.iter().sum::<f64>())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, payoff_paths, reference_paths);
criterion_main!(benches);
