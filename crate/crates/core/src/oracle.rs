//! The checking oracle: given a program and candidate set, report success,
//! the first syntax error, or the candidates to blame.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{print_expr, CandidateInvariant, CandidateSet, Location, Program};
use crate::smt::{CheckResult, Checker, SmtError, Status};
use crate::vcgen::{IntSemantics, VcContext, VcKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxError {
    pub candidate: usize,
    pub source: String,
    pub message: String,
}

/// Per-candidate obligation results.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateStatus {
    pub id: usize,
    pub source: String,
    pub established: bool,
    pub preserved: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unproven {
    pub kind: VcKind,
    pub assertion: String,
    pub location: Location,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obligation {
    pub kind: VcKind,
    pub result: CheckResult,
}

/// `(S, SyntaxError, I_L)` plus what was checked on the way.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub success: bool,
    pub syntax_error: Option<SyntaxError>,
    pub blamed: CandidateSet,
    pub statuses: Vec<CandidateStatus>,
    pub unproven: Vec<Unproven>,
    pub obligations: Vec<Obligation>,
}

impl OracleVerdict {
    fn syntax(err: SyntaxError) -> Self {
        OracleVerdict {
            success: false,
            syntax_error: Some(err),
            blamed: CandidateSet::new(),
            statuses: Vec::new(),
            unproven: Vec::new(),
            obligations: Vec::new(),
        }
    }

    /// Every candidate passed establishment and preservation but some
    /// assertion is still unproven.
    pub fn inductive_but_insufficient(&self) -> bool {
        !self.success && self.syntax_error.is_none() && self.blamed.is_empty()
    }

    pub fn blamed_ids(&self) -> BTreeSet<usize> {
        self.blamed.ids().into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Anything Houdini and Repair can query.
pub trait InvariantOracle: Send + Sync {
    fn check(&self, candidates: &CandidateSet) -> Result<OracleVerdict, OracleError>;
}

/// Syntax problems the oracle reports one at a time: parse failures and
/// variables that are not in scope at the loop head.
pub fn syntax_problem(program: &Program, c: &CandidateInvariant) -> Option<String> {
    let Some(expr) = &c.expr else {
        return Some(c.parse_error.clone().unwrap_or_else(|| "cannot parse invariant".into()));
    };
    let in_scope: BTreeSet<&str> = program.loop_head_vars().iter().map(|d| d.name.as_str()).collect();
    expr.free_vars().into_iter().find(|v| !in_scope.contains(v.as_str())).map(|v| format!("unbound logic variable {v}"))
}

/// The oracle for one program, backed by an SMT checker.
pub struct ProgramOracle {
    pub program: Program,
    ctx: VcContext,
    checker: Arc<dyn Checker>,
    scope: String,
    parallel: bool,
}

impl ProgramOracle {
    pub fn new(program: Program, checker: Arc<dyn Checker>, semantics: IntSemantics) -> Self {
        let ctx = VcContext::new(&program, semantics);
        let scope = format!("{}:{:?}", program.fingerprint(), semantics);
        ProgramOracle { program, ctx, checker, scope, parallel: true }
    }

    /// Discharge per-candidate obligations one at a time.
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn semantics(&self) -> IntSemantics {
        self.ctx.semantics
    }

    pub fn checker(&self) -> &Arc<dyn Checker> {
        &self.checker
    }

    fn per_candidate(
        &self,
        all: &CandidateSet,
        c: &CandidateInvariant,
    ) -> Result<(CheckResult, CheckResult), OracleError> {
        let e = self.ctx.establishment(c).expect("parsed candidate");
        let p = self.ctx.preservation(all, c).expect("parsed candidate");
        Ok((self.checker.check(&self.scope, &e)?, self.checker.check(&self.scope, &p)?))
    }
}

impl InvariantOracle for ProgramOracle {
    fn check(&self, candidates: &CandidateSet) -> Result<OracleVerdict, OracleError> {
        for c in candidates {
            if let Some(message) = syntax_problem(&self.program, c) {
                return Ok(OracleVerdict::syntax(SyntaxError { candidate: c.id, source: c.source.clone(), message }));
            }
        }

        let items: Vec<&CandidateInvariant> = candidates.iter().collect();
        let results: Vec<(CheckResult, CheckResult)> = if self.parallel {
            items.par_iter().map(|c| self.per_candidate(candidates, c)).collect::<Result<_, _>>()?
        } else {
            items.iter().map(|c| self.per_candidate(candidates, c)).collect::<Result<_, _>>()?
        };

        let mut obligations = Vec::new();
        let mut statuses = Vec::new();
        let mut blamed_ids = BTreeSet::new();
        for (c, (e, p)) in items.iter().zip(results) {
            let status =
                CandidateStatus { id: c.id, source: c.source.clone(), established: e.proved(), preserved: p.proved() };
            if !(status.established && status.preserved) {
                blamed_ids.insert(c.id);
            }
            statuses.push(status);
            obligations.push(Obligation { kind: VcKind::Establishment(c.id), result: e });
            obligations.push(Obligation { kind: VcKind::Preservation(c.id), result: p });
        }

        let mut unproven = Vec::new();
        if blamed_ids.is_empty() {
            let post = self.program.post();
            let body = self.program.body_assertions();
            let prelude = self.program.prelude_assertions();
            let mut vcs = self.ctx.sufficiency(candidates);
            vcs.extend(self.ctx.prelude_assertions());
            for vc in vcs {
                let result = self.checker.check(&self.scope, &vc)?;
                if !result.proved() {
                    let (expr, location) = match &vc.kind {
                        VcKind::Sufficiency(k) => post[*k].clone(),
                        VcKind::BodyAssertion(l) => {
                            body.iter().find(|(_, bl)| bl == l).cloned().expect("body assertion")
                        }
                        VcKind::PreludeAssertion(l) => {
                            prelude.iter().find(|(_, pl)| pl == l).cloned().expect("prelude assertion")
                        }
                        _ => unreachable!("assertion VC"),
                    };
                    unproven.push(Unproven { kind: vc.kind.clone(), assertion: print_expr(&expr), location });
                }
                obligations.push(Obligation { kind: vc.kind, result });
            }
        }

        let success = blamed_ids.is_empty() && unproven.is_empty();
        Ok(OracleVerdict {
            success,
            syntax_error: None,
            blamed: candidates.subset(&blamed_ids),
            statuses,
            unproven,
            obligations,
        })
    }
}

/// Number of solver-backed obligations in a verdict.
pub fn query_count(v: &OracleVerdict) -> usize {
    v.obligations.len()
}

/// True when no obligation came back inconclusive.
pub fn all_conclusive(v: &OracleVerdict) -> bool {
    v.obligations.iter().all(|o| matches!(o.result.status, Status::Proved | Status::Refuted { .. }))
}
