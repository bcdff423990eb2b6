//! File formats, run configuration and subcommands for the `theme-annotate`
//! binary, on top of `theme-annotate-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
