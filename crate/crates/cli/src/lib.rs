//! Command-line front end for the `concentric` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod table_io;

use clap::Parser;

pub use args::Cli;
pub use error::CliError;

/// Parses `argv` and runs the command. Returns what should go to standard
/// output; clap's own help and parse errors come back as `Err`.
pub fn run_from<I, T>(argv: I) -> Result<Result<String, CliError>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(commands::run(&cli))
}
