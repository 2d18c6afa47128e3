//! Bounded brute-force execution of a whole program. Every nondeterministic
//! value and every uninitialized read ranges over a small domain; the loop is
//! unrolled until no new loop-head state appears or the iteration bound is
//! hit. Used to cross-check verdicts and to filter candidates cheaply.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::lang::eval::{eval_bool_bounded, eval_condition, exec, Env, EvalError, ExecConfig, Outcome};
use crate::lang::{CandidateInvariant, CandidateSet, Location, Program, Scope};
use crate::vcgen::{IntSemantics, VcContext};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub lo: i64,
    pub hi: i64,
    pub max_iterations: usize,
    /// Stop once this many distinct loop-head states have been seen.
    pub max_states: usize,
    pub semantics: IntSemantics,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig { lo: -6, hi: 6, max_iterations: 64, max_states: 200_000, semantics: IntSemantics::Unbounded }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A candidate was false at a loop-head state.
    Candidate { id: usize, source: String, state: Env },
    /// An assertion failed.
    Assertion { location: Location, state: Env },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub violations: Vec<Violation>,
    pub loop_head_states: usize,
    pub iterations: usize,
    /// The state bound was hit before the frontier emptied.
    pub truncated: bool,
}

impl ExploreReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated_candidates(&self) -> BTreeSet<usize> {
        self.violations
            .iter()
            .filter_map(|v| match v {
                Violation::Candidate { id, .. } => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn failed_assertions(&self) -> BTreeSet<Location> {
        self.violations
            .iter()
            .filter_map(|v| match v {
                Violation::Assertion { location, .. } => Some(*location),
                _ => None,
            })
            .collect()
    }
}

struct Explorer<'a> {
    cfg: ExecConfig,
    config: &'a ExploreConfig,
    body_scoped: BTreeSet<String>,
    report: ExploreReport,
    bad_candidates: BTreeSet<usize>,
    bad_asserts: BTreeSet<Location>,
}

impl Explorer<'_> {
    fn record_outcomes(&mut self, outcomes: Vec<Outcome>, next: &mut Vec<Env>) {
        for o in outcomes {
            match o {
                Outcome::Normal(env) => next.push(env),
                Outcome::AssertFailed(loc, env) => {
                    if self.bad_asserts.insert(loc) {
                        self.report.violations.push(Violation::Assertion { location: loc, state: env });
                    }
                }
                Outcome::Returned(_) | Outcome::Blocked => {}
            }
        }
    }

    /// Drop temporaries and body-scoped variables so that equal loop-head
    /// states compare equal.
    fn loop_head(&self, mut env: Env) -> Env {
        env.retain(|k, _| !k.contains('$') && !self.body_scoped.contains(k));
        env
    }

    fn check_candidates(&mut self, env: &Env, candidates: &[&CandidateInvariant]) -> Result<(), EvalError> {
        for c in candidates {
            if self.bad_candidates.contains(&c.id) {
                continue;
            }
            let Some(expr) = &c.expr else { continue };
            let expr = expr.guarded();
            for full in self.cfg.materialize(env, &expr.free_vars()) {
                if !eval_bool_bounded(&expr, &full, self.config.lo, self.config.hi)? {
                    self.bad_candidates.insert(c.id);
                    self.report.violations.push(Violation::Candidate {
                        id: c.id,
                        source: c.source.clone(),
                        state: full,
                    });
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Run `program` on every initial state in the domain, checking each
/// candidate at every loop-head visit and every assertion on the way.
pub fn explore(
    program: &Program,
    candidates: &CandidateSet,
    config: &ExploreConfig,
) -> Result<ExploreReport, EvalError> {
    let ctx = VcContext::new(program, config.semantics);
    let mut cfg = ExecConfig::for_program(program, config.lo, config.hi);
    cfg.kinds.extend(ctx.temps.iter().map(|(k, v)| (k.clone(), *v)));
    let mut ex = Explorer {
        cfg,
        config,
        body_scoped: program.decls.iter().filter(|d| d.scope == Scope::Body).map(|d| d.name.clone()).collect(),
        report: ExploreReport::default(),
        bad_candidates: BTreeSet::new(),
        bad_asserts: BTreeSet::new(),
    };
    let items: Vec<&CandidateInvariant> = candidates.iter().collect();

    let mut entry = Vec::new();
    let outcomes = exec(&ctx.prelude, &Env::new(), &ex.cfg)?;
    ex.record_outcomes(outcomes, &mut entry);

    let mut seen: HashSet<Env> = HashSet::new();
    let mut frontier: Vec<Env> = Vec::new();
    for env in entry {
        let env = ex.loop_head(env);
        if seen.insert(env.clone()) {
            frontier.push(env);
        }
    }

    while !frontier.is_empty() {
        if ex.report.iterations > config.max_iterations {
            break;
        }
        let mut next = Vec::new();
        for env in &frontier {
            ex.check_candidates(env, &items)?;
            for (state, holds) in eval_condition(&ex.cfg, env, &ctx.guard)? {
                let outcomes = exec(if holds { &ctx.body } else { &ctx.epilogue }, &state, &ex.cfg)?;
                if holds {
                    ex.record_outcomes(outcomes, &mut next);
                } else {
                    ex.record_outcomes(outcomes, &mut Vec::new());
                }
            }
        }
        ex.report.iterations += 1;
        frontier.clear();
        for env in next {
            let env = ex.loop_head(env);
            if seen.len() >= config.max_states {
                ex.report.truncated = true;
                break;
            }
            if seen.insert(env.clone()) {
                frontier.push(env);
            }
        }
        if ex.report.truncated {
            break;
        }
    }
    ex.report.loop_head_states = seen.len();
    Ok(ex.report)
}

/// Candidates that held at every explored loop-head state.
pub fn surviving(
    program: &Program,
    candidates: &CandidateSet,
    config: &ExploreConfig,
) -> Result<CandidateSet, EvalError> {
    let report = explore(program, candidates, config)?;
    let bad = report.violated_candidates();
    let mut out = candidates.clone();
    out.remove_ids(&bad);
    Ok(out)
}
