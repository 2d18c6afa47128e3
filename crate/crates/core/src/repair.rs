//! Repair: feed oracle output back to the model and try its fixes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::houdini::{houdini, HoudiniOutcome};
use crate::lang::{annotate, CandidateSet, Program};
use crate::oracle::{InvariantOracle, OracleError, OracleVerdict};
use crate::proposer::{complete, render_prompt, GenerationConfig, PromptTemplate, Provider, Purpose, Request};

/// Verifier-style report of a verdict, in the vocabulary the repair prompt
/// expects.
pub fn render_feedback(verdict: &OracleVerdict) -> String {
    let mut out = String::new();
    if let Some(err) = &verdict.syntax_error {
        let _ = writeln!(out, "syntax error in loop invariant {}: {}", err.source, err.message);
        return out;
    }
    let blamed = verdict.blamed_ids();
    for s in &verdict.statuses {
        if blamed.contains(&s.id) {
            let yn = |b: bool| if b { "yes" } else { "no" };
            let _ = writeln!(
                out,
                "invariant {}: established={}, preserved={}",
                s.source,
                yn(s.established),
                yn(s.preserved)
            );
        } else if !blamed.is_empty() {
            let _ = writeln!(out, "invariant {}: partially proven to be inductive", s.source);
        } else {
            let _ = writeln!(out, "invariant {}: established=yes, preserved=yes", s.source);
        }
    }
    for u in &verdict.unproven {
        let _ = writeln!(out, "Unproven: assertion {} at line {}", u.assertion, u.location.line);
    }
    if out.is_empty() {
        out.push_str("no loop invariants given\n");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRound {
    pub round: usize,
    pub feedback: String,
    pub response: Option<String>,
    pub provider_error: Option<String>,
    pub candidates: CandidateSet,
    pub verdict: Option<OracleVerdict>,
    pub houdini: Option<HoudiniOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub success: bool,
    pub invariants: CandidateSet,
    pub rounds_used: usize,
    pub transcript: Vec<RepairRound>,
    pub oracle_calls: usize,
    pub provider_calls: usize,
}

pub struct RepairContext<'a> {
    pub benchmark: &'a str,
    pub program: &'a Program,
    pub oracle: &'a dyn InvariantOracle,
    pub provider: &'a dyn Provider,
    pub template: &'a PromptTemplate,
    pub config: &'a GenerationConfig,
}

/// Up to `n_rounds` repair attempts starting from `candidates`.
pub fn repair(
    ctx: &RepairContext<'_>,
    candidates: &CandidateSet,
    n_rounds: usize,
) -> Result<RepairOutcome, OracleError> {
    let mut outcome = RepairOutcome {
        success: false,
        invariants: CandidateSet::new(),
        rounds_used: 0,
        transcript: Vec::new(),
        oracle_calls: 0,
        provider_calls: 0,
    };
    let mut current = candidates.clone();
    let mut verdict = ctx.oracle.check(&current)?;
    outcome.oracle_calls += 1;
    if verdict.success {
        outcome.success = true;
        outcome.invariants = current;
        return Ok(outcome);
    }

    for round in 1..=n_rounds {
        outcome.rounds_used = round;
        let feedback = render_feedback(&verdict);
        let code = annotate(ctx.program, &current);
        let prompt = render_prompt(ctx.template, &code, Some(&feedback)).expect("repair template has an error slot");
        let request = Request {
            benchmark: ctx.benchmark,
            program: ctx.program,
            prompt: &prompt,
            index: round - 1,
            purpose: Purpose::Repair { round },
            config: ctx.config,
        };
        outcome.provider_calls += 1;
        let mut record = RepairRound {
            round,
            feedback,
            response: None,
            provider_error: None,
            candidates: CandidateSet::new(),
            verdict: None,
            houdini: None,
        };
        let completion = match complete(ctx.provider, &request) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("{}: repair round {round}: {e}", ctx.benchmark);
                record.provider_error = Some(e.to_string());
                outcome.transcript.push(record);
                continue;
            }
        };
        record.response = Some(completion.raw);
        record.candidates = completion.extracted.clone();

        let v = ctx.oracle.check(&completion.extracted)?;
        outcome.oracle_calls += 1;
        record.verdict = Some(v.clone());
        if v.success {
            outcome.success = true;
            outcome.invariants = completion.extracted;
            outcome.transcript.push(record);
            return Ok(outcome);
        }
        let h = houdini(ctx.oracle, &completion.extracted)?;
        outcome.oracle_calls += h.oracle_calls;
        let solved = h.success;
        if solved {
            outcome.invariants = h.survivors.clone();
        }
        record.houdini = Some(h);
        outcome.transcript.push(record);
        if solved {
            outcome.success = true;
            return Ok(outcome);
        }
        current = completion.extracted;
        verdict = v;
    }
    Ok(outcome)
}
