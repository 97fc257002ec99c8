//! Command-line driver for `circumpolar-core`: configuration parsing, run
//! modes and artifact emission.

// Guards of the form `!(x > 0.0)` reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod modes;
pub mod sweep;

pub use config::{load_config, parse_config, Mode, Overrides, RunSpec};
pub use error::{CliError, Result};
pub use modes::{run, RunOutcome};
