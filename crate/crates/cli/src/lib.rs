//! Command-line driver for `nonlocal-fredholm`: JSON problem configs,
//! reproducible CSV/JSON outputs and the `verify` harness.
//!
//! Exit codes: 0 success, 1 malformed config or runtime failure, 2 violated
//! hypothesis or failed verify row, 3 incompatible resonant solve.

// `!(x > 0.0)` is the NaN-rejecting form used for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use error::{CliError, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NONLOCAL_FREDHOLM_THREADS";
