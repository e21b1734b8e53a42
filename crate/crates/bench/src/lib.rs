//! Criterion benchmarks for the planner and classifier; see `benches/`.
