//! Pipeline orchestration, configuration and the HTTP service for `ppl`.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod serve;
pub mod views;

pub use config::AnalysisConfig;
pub use error::CliError;
pub use pipeline::{Pipeline, PredictParts, STAGES};
