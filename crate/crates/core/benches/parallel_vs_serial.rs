//! Parallel fan-out versus the sequential twins on the two batch surfaces:
//! regime-map grids (many independent closed-form cells) and simulator trial
//! batches (many independent encodes). Build with `--no-default-features` to
//! measure the pure sequential build of the parallel entry points as well.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mdregions::gaussian_md::{regime_map, regime_map_seq};
use mdregions::sim::{copy_channel_config, run_trials, run_trials_seq};

fn regime_grid(c: &mut Criterion) {
    let d12 = (0.051, 0.095, 48);
    let d23 = (0.051, 0.149, 48);
    let mut g = c.benchmark_group("regime_map_48x48");
    g.bench_function("parallel", |b| {
        b.iter(|| regime_map(0.1, 0.15, 0.2, black_box(d12), black_box(d23)).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| regime_map_seq(0.1, 0.15, 0.2, black_box(d12), black_box(d23)).unwrap())
    });
    g.finish();
}

fn trial_batch(c: &mut Criterion) {
    // Rate 1.2 on the binary copy channel: most trials succeed after a few
    // hundred examined codewords, so one batch is a meaningful workload.
    let mut cfg = copy_channel_config(10, 0.1, 64, 9);
    cfg.private_rates = vec![(1, 1.2)];
    let mut g = c.benchmark_group("copy_channel_64_trials");
    g.sample_size(20);
    g.bench_function("parallel", |b| b.iter(|| run_trials(black_box(&cfg)).unwrap()));
    g.bench_function("sequential", |b| b.iter(|| run_trials_seq(black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, regime_grid, trial_batch);
criterion_main!(benches);
