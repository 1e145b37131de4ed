//! Replication sweep throughput: rayon fan-out vs the sequential fallback.
//!
//! The unit of work is one full identification episode, which is exactly what
//! the benchmark harness replicates over seeds.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gai_core::algorithms::{run_gai_episode, Algorithm, AlgorithmSpec};
use gai_core::exec::{map_seeds, map_seeds_serial};
use gai_core::model::{BanditInstance, RewardLaw};

fn episode_sweep(c: &mut Criterion) {
    let instance =
        BanditInstance::synthetic_uniform(10, 0.3, 0.7, 0.5, RewardLaw::Bernoulli, 42).unwrap();
    let spec = AlgorithmSpec::new(Algorithm::Hdoc, 0.1);
    let horizon = 3_000;
    let run = |seed: u64| {
        let trace = run_gai_episode(&spec, &instance, horizon, seed).unwrap();
        trace.pulls.len()
    };

    let mut group = c.benchmark_group("episode_sweep");
    for reps in [8usize, 32] {
        let seeds: Vec<u64> = (0..reps as u64).collect();
        group.bench_with_input(BenchmarkId::new("parallel", reps), &seeds, |b, seeds| {
            b.iter(|| black_box(map_seeds(seeds, run)))
        });
        group.bench_with_input(BenchmarkId::new("serial", reps), &seeds, |b, seeds| {
            b.iter(|| black_box(map_seeds_serial(seeds, run)))
        });
    }
    group.finish();
}

criterion_group!(benches, episode_sweep);
criterion_main!(benches);
