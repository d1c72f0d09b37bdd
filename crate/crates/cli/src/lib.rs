//! Scenario files, CSV tables and subcommands behind the `lqg` binary.

pub mod bundled;
pub mod commands;
pub mod scenario;
pub mod table;
