//! Sequential vs rayon batch execution of rendezvous scenarios.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rlab_core::exec::{par_map, seq_map};
use rlab_core::line::Orientation;
use rlab_core::simulator::AlgorithmKind;
use rlab_core::sweep::{run_params, GenParam, ScenarioParams};

fn batch(algorithm: AlgorithmKind, generator: GenParam, d_max: u64) -> Vec<ScenarioParams> {
    let mut out = Vec::new();
    for d in 1..=d_max {
        for delay in [0, 1, 5, 40, 300] {
            for flip in [false, true] {
                out.push(ScenarioParams {
                    algorithm,
                    generator: generator.clone(),
                    seed: d * 31 + delay,
                    start_a: -(d as i64) / 2,
                    start_b: -(d as i64) / 2 + d as i64,
                    wake_a: 1,
                    wake_b: 1 + delay,
                    orient_a: Orientation::Agree,
                    orient_b: if flip { Orientation::Flip } else { Orientation::Agree },
                    kappa: 60,
                    max_rounds: None,
                });
            }
        }
    }
    out
}

fn elapsed_sum(results: Vec<Option<u64>>) -> u64 {
    results.into_iter().map(|e| e.unwrap_or(0)).sum()
}

fn sweeps(c: &mut Criterion) {
    let batches = [
        ("canon", batch(AlgorithmKind::Canon, GenParam::Canonical, 48)),
        ("knownD", batch(AlgorithmKind::KnownD, GenParam::Random { bits: 64 }, 12)),
        ("noD", batch(AlgorithmKind::UnknownD, GenParam::Random { bits: 64 }, 8)),
    ];
    let run = |p: &ScenarioParams| run_params(p).ok().and_then(|r| r.outcome.elapsed());
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, jobs) in &batches {
        group.bench_with_input(BenchmarkId::new("sequential", name), jobs, |b, jobs| {
            b.iter(|| elapsed_sum(seq_map(black_box(jobs), run)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", name), jobs, |b, jobs| {
            b.iter(|| elapsed_sum(par_map(black_box(jobs), run)))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
