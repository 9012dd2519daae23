//! Command implementations behind the `mt` binary and its HTTP API.

pub mod commands;
mod error;
pub mod server;

pub use error::{
    CliError, CliResult, EXIT_ENVIRONMENT, EXIT_INTERNAL, EXIT_INVALID, EXIT_OK, EXIT_PROVENANCE,
};
