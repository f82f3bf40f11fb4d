//! Batch command-line front end for the `treeseg` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

pub use args::Cli;
pub use commands::run;
