//! Benchmark harness: corpus normalization and categorization, campaigns
//! over a corpus, and the pass@k and union-Houdini aggregates.

pub mod campaign;
pub mod categorize;
pub mod corpus;
pub mod fuzz;
pub mod normalize;
pub mod passk;
pub mod union;

use std::path::Path;

use thiserror::Error;

pub use campaign::{
    aggregate, load_results, recompute, run_benchmark, run_campaign, BenchmarkResult, CampaignConfig, CampaignMeta,
    CampaignReport, CampaignSummary, RunStatus, UnionConfig,
};
pub use categorize::{categorize, Category, Exclusion};
pub use corpus::{ingest, BenchmarkEntry, Expected, Manifest};
pub use normalize::normalize;
pub use passk::pass_at_k;
pub use union::{union_houdini_rate, UnionSampler};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("report: {0}")]
    Report(String),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io { path: path.display().to_string(), source }
    }
}
