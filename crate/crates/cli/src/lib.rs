//! Command-line front end for `rmsched`: JSON instance and schedule files,
//! benchmark tables, parameter sweeps and SVG Gantt charts.

pub mod app;
pub mod args;
pub mod bench;
pub mod config;
pub mod gantt;
pub mod io;
pub mod solve;
pub mod sweep;
