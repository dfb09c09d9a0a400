//! Library side of the `memphase` binary: configuration, the table
//! commands and the validation suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MEMPHASE_THREADS";
