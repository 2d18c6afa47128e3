//! The end-to-end procedure: sample completions, check each, then Houdini
//! on their union, then repair.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::houdini::{houdini, HoudiniOutcome};
use crate::lang::{CandidateSet, Program};
use crate::oracle::{InvariantOracle, OracleVerdict};
use crate::proposer::{complete, render_prompt, GenerationConfig, PromptTemplate, Provider, Purpose, Request};
use crate::repair::{repair, RepairContext, RepairOutcome};

pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopyConfig {
    pub n_samples: usize,
    pub n_repair: usize,
    pub prompt: PromptTemplate,
    pub repair_prompt: PromptTemplate,
    pub enable_houdini: bool,
    pub enable_repair: bool,
    /// Check every completion even after one succeeds. The outcome is the
    /// same; the record then has a verdict for each completion.
    pub eager: bool,
    pub generation: GenerationConfig,
}

impl Default for LoopyConfig {
    fn default() -> Self {
        LoopyConfig {
            n_samples: 15,
            n_repair: 0,
            prompt: PromptTemplate::m2(),
            repair_prompt: PromptTemplate::mr(),
            enable_houdini: true,
            enable_repair: false,
            eager: false,
            generation: GenerationConfig::default(),
        }
    }
}

impl LoopyConfig {
    /// 8 samples and 7 repair rounds.
    pub fn repair_mode() -> Self {
        LoopyConfig { n_samples: 8, n_repair: 7, enable_repair: true, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub index: usize,
    pub raw: Option<String>,
    pub candidates: CandidateSet,
    pub provider_error: Option<String>,
    pub oracle_error: Option<String>,
    /// Empty sets are not sent to the oracle.
    pub skipped: bool,
    pub verdict: Option<OracleVerdict>,
    pub success: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Completion,
    Houdini,
    Repair,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub oracle_calls: usize,
    pub provider_calls: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub benchmark: String,
    pub fingerprint: String,
    pub prompt: String,
    pub provider: String,
    pub completions: Vec<CompletionRecord>,
    pub first_success: Option<usize>,
    pub union: CandidateSet,
    pub houdini: Option<HoudiniOutcome>,
    pub repair: Option<RepairOutcome>,
    pub success: bool,
    pub solved_by: Option<Stage>,
    pub invariants: CandidateSet,
    /// Infrastructure failure that ended the session early.
    pub error: Option<String>,
    pub counters: Counters,
}

impl SessionRecord {
    /// Completions whose own set verified.
    pub fn successful_completions(&self) -> usize {
        self.completions.iter().filter(|c| c.success).count()
    }

    pub fn infra_errors(&self) -> usize {
        self.completions.iter().filter(|c| c.oracle_error.is_some()).count() + usize::from(self.error.is_some())
    }
}

pub struct Session<'a> {
    pub benchmark: &'a str,
    pub program: &'a Program,
    pub oracle: &'a dyn InvariantOracle,
    pub provider: &'a dyn Provider,
}

pub fn loopy(session: &Session<'_>, config: &LoopyConfig) -> SessionRecord {
    let start = Instant::now();
    let mut rec = SessionRecord {
        schema_version: SESSION_SCHEMA_VERSION,
        benchmark: session.benchmark.to_string(),
        fingerprint: session.program.fingerprint(),
        prompt: config.prompt.name.clone(),
        provider: session.provider.name(),
        completions: Vec::new(),
        first_success: None,
        union: CandidateSet::new(),
        houdini: None,
        repair: None,
        success: false,
        solved_by: None,
        invariants: CandidateSet::new(),
        error: None,
        counters: Counters::default(),
    };
    let generation = GenerationConfig { completions: config.n_samples, ..config.generation.clone() };
    let prompt = match render_prompt(&config.prompt, &session.program.source_text, None) {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };

    for index in 0..config.n_samples {
        let request = Request {
            benchmark: session.benchmark,
            program: session.program,
            prompt: &prompt,
            index,
            purpose: Purpose::Sample { total: config.n_samples },
            config: &generation,
        };
        rec.counters.provider_calls += 1;
        let mut cr = CompletionRecord {
            index,
            raw: None,
            candidates: CandidateSet::new(),
            provider_error: None,
            oracle_error: None,
            skipped: false,
            verdict: None,
            success: false,
        };
        match complete(session.provider, &request) {
            Ok(c) => {
                cr.raw = Some(c.raw);
                cr.candidates = c.extracted;
            }
            Err(e) => cr.provider_error = Some(e.to_string()),
        }
        if cr.candidates.is_empty() && !session.program.post().is_empty() {
            cr.skipped = true;
        } else {
            rec.counters.oracle_calls += 1;
            match session.oracle.check(&cr.candidates) {
                Ok(v) => {
                    cr.success = v.success;
                    cr.verdict = Some(v);
                }
                Err(e) => cr.oracle_error = Some(e.to_string()),
            }
        }
        if cr.success {
            if rec.first_success.is_none() {
                rec.first_success = Some(index);
                rec.success = true;
                rec.solved_by = Some(Stage::Completion);
                rec.invariants = cr.candidates.clone();
            }
        } else if rec.first_success.is_none() {
            rec.union.extend_from(&cr.candidates);
        }
        rec.completions.push(cr);
        if rec.success && !config.eager {
            break;
        }
    }

    if !rec.success && config.enable_houdini {
        match houdini(session.oracle, &rec.union) {
            Ok(h) => {
                rec.counters.oracle_calls += h.oracle_calls;
                if h.success {
                    rec.success = true;
                    rec.solved_by = Some(Stage::Houdini);
                    rec.invariants = h.survivors.clone();
                }
                rec.houdini = Some(h);
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
    }

    if !rec.success && config.enable_repair && rec.error.is_none() {
        let ctx = RepairContext {
            benchmark: session.benchmark,
            program: session.program,
            oracle: session.oracle,
            provider: session.provider,
            template: &config.repair_prompt,
            config: &generation,
        };
        match repair(&ctx, &rec.union, config.n_repair) {
            Ok(r) => {
                rec.counters.oracle_calls += r.oracle_calls;
                rec.counters.provider_calls += r.provider_calls;
                if r.success {
                    rec.success = true;
                    rec.solved_by = Some(Stage::Repair);
                    rec.invariants = r.invariants.clone();
                }
                rec.repair = Some(r);
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
    }

    rec.counters.wall_ms = start.elapsed().as_millis() as u64;
    rec
}
