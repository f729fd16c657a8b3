//! Benchmarks for `lambdasim-core`; see `benches/`.
