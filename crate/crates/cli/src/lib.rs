//! Command-line surface and live tuning service for the eventforge codec.

pub mod cli;
pub mod commands;
pub mod error;
pub mod media;
pub mod protocol;
pub mod report;
pub mod service;
pub mod session;

pub use cli::Cli;
pub use commands::run;
pub use error::CliError;
