//! Config-driven experiment runner for `wsobolev-core`: parses experiment
//! descriptions, dispatches checks, runs convergence studies and writes
//! JSON or CSV reports.

pub mod config;
pub mod report;
pub mod runner;
pub mod study;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "WSOBOLEV_WORKERS";

/// Exit code of a run whose applicable checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code of a run with a failed applicable check.
pub const EXIT_FAIL: i32 = 1;
/// Exit code of an invalid configuration or command line.
pub const EXIT_INVALID: i32 = 2;
