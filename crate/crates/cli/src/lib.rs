//! Library side of the `tcbench` command-line tool: argument definitions,
//! config loading, command implementations and SVG plotting.

pub mod cli;
pub mod commands;
pub mod config;
pub mod plot;
