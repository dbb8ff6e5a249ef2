//! Library surface of the experiment CLI, split out so integration tests
//! can drive the commands directly.

pub mod config;
pub mod policy_file;
pub mod runner;

pub use config::{load, Experiment};
pub use runner::{
    cmd_compare, cmd_simulate, cmd_solve, cmd_sweep, emit_csv, render_csv, CliError, ResultRow,
};
