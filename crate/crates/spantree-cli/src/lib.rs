//! Experiment orchestration for the spantree library: threshold sweeps and
//! invariant regression suites with deterministic CSV output.

pub mod invariants;
pub mod sweep;
