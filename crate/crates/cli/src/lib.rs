//! Batch runner for the widthlab verification suites.
//!
//! Each suite produces a [`Report`] of checks, written as `<suite>.json`
//! and `<suite>.csv` plus plot-ready tables.

pub mod config;
pub mod fixtures;
pub mod report;
pub mod suites;

pub use config::{parse_suites, RunConfig, Suite, OUT_ENV};
pub use fixtures::{export_fixture, Fixture};
pub use report::{Basis, Check, Relation, Report, Table};
pub use suites::{run_all, run_suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] widthlab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
