//! Frame input, report formats, oracle suites and the command
//! implementations behind the `pivot` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod frame;
pub mod montecarlo;
pub mod tables;
pub mod verify;

pub use error::{CliError, Result};
