use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use concentric::estimation::em_fit;
use concentric::model::{joint_vector_direct, joint_vector_kron, joint_vector_product};
use concentric::sample::sample;
use concentric::transforms::kron_apply_in_place;
use concentric::{BaseMatrix, EmConfig, ModelSpec};

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kron_apply");
    for p in [8usize, 14, 20] {
        let factors = vec![BaseMatrix::EFFECT; p];
        let x: Vec<f64> = (0..1usize << p).map(|i| i as f64).collect();
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter_batched_ref(
                || x.clone(),
                |v| kron_apply_in_place(&factors, v).unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn joint(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint");
    for q in [8usize, 16] {
        let spec = ModelSpec::from_rho(q, 0.6).unwrap();
        group.bench_with_input(BenchmarkId::new("direct", q), &spec, |b, s| {
            b.iter(|| joint_vector_direct(black_box(s)))
        });
        group.bench_with_input(BenchmarkId::new("product", q), &spec, |b, s| {
            b.iter(|| joint_vector_product(black_box(s)))
        });
        group.bench_with_input(BenchmarkId::new("kronecker", q), &spec, |b, s| {
            b.iter(|| joint_vector_kron(black_box(s)))
        });
    }
    group.finish();
}

fn em(c: &mut Criterion) {
    let mut group = c.benchmark_group("em_fit");
    for q in [4usize, 12] {
        let spec = ModelSpec::from_rho(q, 0.6).unwrap();
        let counts = sample(&spec, 1000, 7, false).unwrap();
        let config = EmConfig::with_tolerance(1e-7);
        group.bench_with_input(BenchmarkId::from_parameter(q), &counts, |b, t| {
            b.iter(|| em_fit(black_box(t), &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel, joint, em);
criterion_main!(benches);
