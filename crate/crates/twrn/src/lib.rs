//! Command-line runner for `twrn-core`: config files, experiment commands and
//! the CSV/JSON result formats.

pub mod cli;
pub mod config;
mod error;
pub mod files;
pub mod format;

pub use error::CliError;
