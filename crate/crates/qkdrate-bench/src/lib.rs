//! Benchmark-only crate; see benches/rates.rs.
