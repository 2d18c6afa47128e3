//! Candidate proposers: prompt rendering, response extraction, and the
//! providers that produce completions.

pub mod enumerate;
pub mod extract;
pub mod prompt;
pub mod provider;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::{CandidateSet, Program};

pub use enumerate::enumerate_candidates;
pub use extract::{extract_invariants, render_block};
pub use prompt::{render_prompt, PromptTemplate};
pub use provider::{
    HttpProvider, OfflineProvider, Provider, RecordingProvider, ReplayProvider, ReplayRecord, ScriptedProvider,
    API_KEY_VAR,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProposerError {
    #[error("missing value for placeholder {0}")]
    MissingPlaceholderValue(String),
    #[error("bad prompt template: {0}")]
    Template(String),
    #[error("API key not set: export {0}")]
    Auth(String),
    #[error("provider failed: {0}")]
    Provider(String),
    #[error("no recorded response for {benchmark} #{index} (prompt {prompt_hash})")]
    ReplayMiss { benchmark: String, prompt_hash: String, index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub completions: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { completions: 15, temperature: 0.7, max_tokens: 2000, model: "gpt-4".into(), seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "purpose", rename_all = "lowercase")]
pub enum Purpose {
    /// Completion `index` of `total` for the initial prompt.
    Sample { total: usize },
    /// A repair round, numbered from 1.
    Repair { round: usize },
}

/// One completion request.
#[derive(Clone, Copy, Debug)]
pub struct Request<'a> {
    pub benchmark: &'a str,
    pub program: &'a Program,
    pub prompt: &'a str,
    pub index: usize,
    pub purpose: Purpose,
    pub config: &'a GenerationConfig,
}

impl Request<'_> {
    pub fn prompt_hash(&self) -> String {
        prompt_hash(self.prompt)
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub raw: String,
    pub extracted: CandidateSet,
    pub provider: String,
    pub latency_ms: u64,
}

/// Ask the provider for one completion and extract its candidates.
pub fn complete(provider: &dyn Provider, request: &Request<'_>) -> Result<Completion, ProposerError> {
    let start = Instant::now();
    let raw = provider.complete(request)?;
    Ok(Completion {
        extracted: extract_invariants(&raw),
        raw,
        provider: provider.name(),
        latency_ms: start.elapsed().as_millis() as u64,
    })
}

/// `config.completions` completions of `template` for the program, in
/// index order.
pub fn generate(
    provider: &dyn Provider,
    template: &PromptTemplate,
    benchmark: &str,
    program: &Program,
    config: &GenerationConfig,
) -> Result<Vec<Completion>, ProposerError> {
    let prompt = render_prompt(template, &program.source_text, None)?;
    (0..config.completions)
        .map(|index| {
            let request = Request {
                benchmark,
                program,
                prompt: &prompt,
                index,
                purpose: Purpose::Sample { total: config.completions },
                config,
            };
            complete(provider, &request)
        })
        .collect()
}
