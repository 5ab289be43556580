//! Sweeps, reports, configuration and calibration on top of `sramdse-core`.

pub mod calibrate;
pub mod config;
pub mod report;
pub mod sweep;

pub use sramdse_core as model;
