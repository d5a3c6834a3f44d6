//! Scenario files, trace output and the `specdo` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod commands;
pub mod scenario_file;
pub mod trace_io;

pub use commands::{cmd_batch, cmd_builtin, cmd_run, cmd_verify, CliError, RunArgs, RunOutcome};
pub use scenario_file::{emit_scenario, parse_scenario, ScenarioFile, ScenarioFileError};
