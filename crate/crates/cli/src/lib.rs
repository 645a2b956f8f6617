//! Configuration and subcommands of the `fastcoll` command-line tool.

pub mod commands;
pub mod config;

pub use commands::{cmd_bench, cmd_evolve, cmd_kernel_dump, cmd_validate, with_threads};
pub use config::{ConfigError, Initial, KernelKind, RunConfig};
