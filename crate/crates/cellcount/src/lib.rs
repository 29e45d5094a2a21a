//! Command-line driver and file formats for the `cellcount-core` pipeline.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod overlay;
pub mod report;

pub use error::{CliError, CliResult};
