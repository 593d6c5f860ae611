//! File formats, run configuration, metrics and the `fmrnn` command line
//! on top of `fmrnn-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod metrics;
pub mod parallel;
