//! Criterion benchmarks for `l1disc`; see `benches/`.
