//! Criterion benchmarks for the analysis and simulation pipeline; see `benches/`.
