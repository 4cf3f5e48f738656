//! Criterion benchmarks for the sbmlab kernels live in `benches/`.
