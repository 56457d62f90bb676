//! Pipelines, files and reports around the `getgrasp` planners.

pub mod baseline;
pub mod bench;
pub mod config;
pub mod error;
pub mod imaging;
pub mod pipeline;
pub mod render;
pub mod report;
pub mod synth;

pub use config::{PlannerId, RunConfig, Settings};
pub use error::{HarnessError, Result};
pub use report::GraspReport;
