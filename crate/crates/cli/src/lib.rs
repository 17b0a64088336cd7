//! Library surface of the `breakout` binary, split out so the pipeline
//! can be driven directly from integration and acceptance tests.

pub mod config;
pub mod pipeline;

pub use config::{validate, Cli, RunConfig};
pub use pipeline::{run, RunError};
