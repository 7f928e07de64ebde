//! Experiment driver for `planadapt`: run configuration, the `adapt`,
//! `sweep`, `rollout`, `trace-search` and `plot` commands, and SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use commands::{
    cmd_adapt, cmd_plot, cmd_rollout, cmd_sweep, cmd_trace_search, parse_script, trace_search,
    SearchStep, SweepRow,
};
pub use config::{RunConfig, SearchSpec, SweepParam, SweepSpec};
pub use error::CliError;
pub use plot::emit_plot;
