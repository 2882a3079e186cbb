//! Library side of the `ldc` binary: run configuration, the training and
//! evaluation pipeline, and argument handling.

mod app;
pub mod config;
pub mod pipeline;

pub use app::run;
