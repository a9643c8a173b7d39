//! Command-line front end for the `photon-memory` library: configuration,
//! the reference input mode and figure-data generation as CSV and JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reference;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::CliError;
pub use reference::make_reference_input;
