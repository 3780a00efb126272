//! Library side of the `codemine` binary: configuration resolution, the
//! analyze/experts/timeseries/commit pipelines and report rendering.

pub mod commands;
pub mod config;
pub mod report;
