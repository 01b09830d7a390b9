//! Criterion benchmark harness for the always-on-voting crates; see the
//! `benches/` directory for the suites.
