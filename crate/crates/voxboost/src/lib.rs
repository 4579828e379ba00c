//! Filesystem side of voxboost: volume containers, checkpoints, CSV
//! artifacts, the run configuration and the `voxboost` command-line driver.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;

pub use commands::{Context, Layout};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use exec::ThreadExecutor;
