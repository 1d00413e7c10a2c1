//! Rollout throughput of the data-parallel paths.
//!
//! Each workload runs inside a rayon pool with all cores and inside a
//! one-thread pool. Building with `--no-default-features` swaps the rayon
//! maps for plain iterators; both pool sizes then measure the sequential
//! path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swingup::controllers::{Controller, EnergyLqrController};
use swingup::io::{evaluate_trials, BenchConfig};
use swingup::optimize::{snes_step, SnesState};
use swingup::robustness::{evaluate_robustness, RobustnessConfig, SweepContext};
use swingup::{ModelParams, RobotKind};

fn baseline() -> Box<dyn Controller> {
    Box::new(
        EnergyLqrController::with_defaults(RobotKind::Pendubot, ModelParams::default()).unwrap(),
    )
}

fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sizes = vec![1, all];
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            (
                n,
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .unwrap(),
            )
        })
        .collect()
}

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

fn robustness(c: &mut Criterion) {
    let p = ModelParams::default();
    let cfg = RobustnessConfig {
        steps: 5,
        profiles: 8,
        ..RobustnessConfig::default()
    };
    let mut ctx = SweepContext::new(RobotKind::Pendubot, 1);
    ctx.trial = ctx.trial.with_t_final(3.0);
    let mut group = c.benchmark_group(format!("robustness/{}", mode()));
    group.sample_size(10);
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| {
                pool.install(|| black_box(evaluate_robustness(&baseline, &p, &cfg, &ctx).unwrap()))
            })
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let p = ModelParams::default();
    let cfg = BenchConfig {
        t_final: 3.0,
        ..BenchConfig::default()
    };
    let mut group = c.benchmark_group(format!("evaluate/{}", mode()));
    group.sample_size(10);
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| {
                pool.install(|| {
                    black_box(evaluate_trials("baseline", &baseline, &p, &cfg).unwrap())
                })
            })
        });
    }
    group.finish();
}

fn snes_generation(c: &mut Criterion) {
    // fitness with a few milliseconds of work per candidate
    let fitness = |x: &[f64]| {
        let mut acc = 0.0;
        for k in 0..20_000 {
            acc += (x[k % x.len()] * k as f64).sin();
        }
        -acc.abs()
    };
    let state = SnesState::new(vec![0.1; 50], 0.5, 3)
        .unwrap()
        .with_population(16)
        .unwrap();
    let mut group = c.benchmark_group(format!("snes_step/{}", mode()));
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| pool.install(|| black_box(snes_step(&state, &fitness).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, robustness, evaluation, snes_generation);
criterion_main!(benches);
