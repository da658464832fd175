use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use l1disc::auxiliary::{build_all_trees, lemma_suite, LemmaOptions, MaxLevel};
use l1disc::combinatorics::full_table;
use l1disc::testfn::{certificate, CertificateOptions};
use l1disc::PointSet;

fn auxiliary(c: &mut Criterion) {
    let mut group = c.benchmark_group("auxiliary");
    group.sample_size(10);
    for m in [3u32, 5] {
        let p = PointSet::van_der_corput(m).unwrap();
        group.bench_with_input(BenchmarkId::new("trees", 1 << m), &p, |b, p| {
            b.iter(|| build_all_trees(black_box(p), MaxLevel::Auto).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("certificate", 1 << m), &p, |b, p| {
            b.iter(|| certificate(black_box(p), &CertificateOptions::default()).unwrap())
        });
    }
    let p = PointSet::van_der_corput(4).unwrap();
    group.bench_function("lemmas/16", |b| {
        b.iter(|| lemma_suite(black_box(&p), &LemmaOptions::default()).unwrap())
    });
    group.bench_function("full_table/8/9", |b| b.iter(|| full_table(black_box(8), 9).unwrap()));
    group.finish();
}

criterion_group!(benches, auxiliary);
criterion_main!(benches);
