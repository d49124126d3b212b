//! Config-driven experiments, tabular output and the acceptance checks.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod output;
