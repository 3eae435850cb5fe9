//! File formats, configuration and commands for the `latemetrics` tool.

pub mod commands;
pub mod compare;
pub mod config;
pub mod report_io;
pub mod series_io;
pub mod trace_io;
