//! Experiment drivers behind the `coalfrag` binary: configuration types,
//! replica orchestration and report emission.

pub mod commands;
pub mod config;
pub mod output;
