use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qdp_core::exec::Exec;
use qdp_core::experiment::{direct_scaling, qae_confidence, qae_scaling};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn direct_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("direct_scaling");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| direct_scaling(100, 30, black_box(&[256, 1024]), 200, 1, exec))
        });
    }
    g.finish();
}

fn qae_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("qae_scaling");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| qae_scaling(black_box(&[32, 128]), 500, 2, exec))
        });
    }
    g.finish();
}

fn median_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("median_confidence");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| qae_confidence(0.3, 64, 25, black_box(200), 3, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, direct_trials, qae_trials, median_trials);
criterion_main!(benches);
