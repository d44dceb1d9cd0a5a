//! Criterion benchmarks for modtail live in `benches/`.
