//! Criterion benchmarks for drwnet live in `benches/`.
