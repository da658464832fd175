use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use l1disc::certified::default_prec;
use l1disc::discrepancy::{l1_norm_exact, l2_norm_sq, l2_norm_sq_cells, linf_norm};
use l1disc::PointSet;

fn norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("norms");
    group.sample_size(10);
    for m in [4u32, 6] {
        let p = PointSet::van_der_corput(m).unwrap();
        group.bench_with_input(BenchmarkId::new("l2_warnock", 1 << m), &p, |b, p| {
            b.iter(|| l2_norm_sq(black_box(p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("l2_cells", 1 << m), &p, |b, p| {
            b.iter(|| l2_norm_sq_cells(black_box(p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("l1_exact", 1 << m), &p, |b, p| {
            b.iter(|| l1_norm_exact(black_box(p), default_prec()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("linf", 1 << m), &p, |b, p| {
            b.iter(|| linf_norm(black_box(p)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, norms);
criterion_main!(benches);
