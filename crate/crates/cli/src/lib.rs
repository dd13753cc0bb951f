//! Command-line front end for `grasskit`.
//!
//! Everything except process exit lives here so tests can drive commands
//! in-process; `main` parses arguments and maps [`CliError`] to exit codes.

pub mod commands;
pub mod error;
pub mod io;
pub mod table;

pub use commands::{run, Cli};
pub use error::CliError;
