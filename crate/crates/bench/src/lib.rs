//! Criterion benchmarks for qpvkex-core; see `benches/`.
