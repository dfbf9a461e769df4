//! Run configuration, artifact formats and command implementations for the
//! `fsns` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod snapshot;

pub use config::RunConfig;
pub use error::RunError;
