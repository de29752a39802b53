use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fivebar::mechanism::{self, JointState, MechanismParams};
use fivebar::synthesis::{self, Bounds, DesignVector, SynthesisOptions};
use fivebar::Execution;

fn grid(n: usize) -> Vec<JointState> {
    let (a0, a1) = (92.37_f64.to_radians(), 153.55_f64.to_radians());
    let (b0, b1) = (40.44_f64.to_radians(), 83.07_f64.to_radians());
    (0..n * n)
        .map(|k| {
            let (i, j) = ((k / n) as f64 / (n - 1) as f64, (k % n) as f64 / (n - 1) as f64);
            JointState::new(a0 + i * (a1 - a0), b0 + j * (b1 - b0))
        })
        .collect()
}

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if Execution::parallel_available() {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn forward_batch(c: &mut Criterion) {
    let params = MechanismParams::prototype();
    let mut group = c.benchmark_group("trace_path");
    for n in [50, 300] {
        let joints = grid(n);
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n * n), &joints, |b, j| {
                b.iter(|| mechanism::trace_path_with(&params, black_box(j), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let desired = DesignVector::prototype().trace(50).unwrap();
    let opts = SynthesisOptions {
        max_iterations: 20,
        max_evaluations: 400,
        ..SynthesisOptions::default()
    };
    let bounds = Bounds::default();
    let mut group = c.benchmark_group("synthesize_multistart");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::new(name, 8), |b| {
            b.iter(|| synthesis::synthesize_multistart(black_box(&desired), &bounds, None, &opts, 8, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward_batch, multistart);
criterion_main!(benches);
