//! Command-line front end: reproducible simulate, evaluate, optimize and
//! report runs driven by a TOML config.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;

pub use error::CliError;
