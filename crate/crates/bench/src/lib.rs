//! Criterion benchmarks for the approximations and the exact / Monte Carlo
//! oracles; see `benches/`. Run with `cargo bench -p mg1-bench`.
