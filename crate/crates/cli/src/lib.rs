//! Config parsing and CSV formatting for the `tdg` batch driver.

pub mod config;
pub mod output;
