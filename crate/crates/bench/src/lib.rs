//! Benchmarks for the decision pipeline live under `benches/`.
