use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lrpq_bench::{fixed_params, lrp_problem};
use lrpq_core::circuit::forward;
use lrpq_core::CircuitSpec;

fn bench_forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward");
    for n_qubits in [2usize, 4, 8, 12] {
        let spec = CircuitSpec::chain(n_qubits, 4).unwrap();
        let params = fixed_params(&spec);
        group.bench_with_input(BenchmarkId::from_parameter(n_qubits), &n_qubits, |b, _| {
            b.iter(|| forward(black_box(&spec), black_box(&params), 0.5).unwrap())
        });
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("adjoint_gradient");
    for n_layers in [2usize, 8, 16] {
        let (objective, params, batch) = lrp_problem(4, n_layers, 16);
        group.bench_with_input(BenchmarkId::new("lrp_4q", n_layers), &n_layers, |b, _| {
            b.iter(|| objective.gradient(black_box(&params), black_box(&batch)).unwrap())
        });
    }
    group.finish();
}

fn bench_finite_diff(c: &mut Criterion) {
    let (objective, params, batch) = lrp_problem(2, 3, 16);
    c.bench_function("finite_diff_gradient/lrp_2q_3l", |b| {
        b.iter(|| objective.finite_diff_gradient(black_box(&params), black_box(&batch), 1e-5).unwrap())
    });
}

criterion_group!(benches, bench_forward, bench_gradient, bench_finite_diff);
criterion_main!(benches);
