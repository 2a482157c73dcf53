//! Experiment orchestration for the magnetic-orbit catalog: config
//! parsing, censuses, probes, splittings, and deterministic reports.

pub mod census;
pub mod config;
pub mod report;
