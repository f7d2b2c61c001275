//! Criterion benchmarks for `netwit-core`; see `benches/`.
