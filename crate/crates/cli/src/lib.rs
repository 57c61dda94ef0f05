//! Library surface of the valuelex CLI, exposed so integration tests can run
//! the pipeline commands in-process.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod context;
pub mod manifest;
