//! Criterion benchmarks for the erpwave pipeline live under `benches/`.
