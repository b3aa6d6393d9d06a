//! Std companion to `amplab-core`: worker pool, experiment runner, artifact
//! files and the command-line interface.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;
pub mod runtime;
