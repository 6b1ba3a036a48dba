//! Criterion benchmarks for `rdm-core` live in `benches/`.
