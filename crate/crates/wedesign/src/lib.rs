//! Batch simulation, calibration, persistence and the trial-conduct service
//! built on `wedesign-core`.

pub mod api;
pub mod calibrate;
pub mod conduct;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod session;
pub mod store;

pub use wedesign_core as core;
