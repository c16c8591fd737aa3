//! Benchmarks for `hwq-core` live in `benches/engine.rs`.
