//! Houdini: prune a candidate set until what remains is inductive and
//! sufficient, or nothing is left.

use serde::{Deserialize, Serialize};

use crate::lang::CandidateSet;
use crate::oracle::{InvariantOracle, OracleError, OracleVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneReason {
    Syntax,
    Blamed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStep {
    pub iteration: usize,
    pub pruned: Vec<String>,
    pub reason: PruneReason,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoudiniOutcome {
    pub success: bool,
    pub survivors: CandidateSet,
    pub oracle_calls: usize,
    pub prune_trace: Vec<PruneStep>,
    /// Verdict of the last oracle call, if any.
    pub last_verdict: Option<OracleVerdict>,
}

pub fn houdini(oracle: &dyn InvariantOracle, candidates: &CandidateSet) -> Result<HoudiniOutcome, OracleError> {
    let mut current = candidates.clone();
    let mut outcome = HoudiniOutcome {
        success: false,
        survivors: CandidateSet::new(),
        oracle_calls: 0,
        prune_trace: Vec::new(),
        last_verdict: None,
    };
    let mut iteration = 0;
    while !current.is_empty() {
        iteration += 1;
        let verdict = oracle.check(&current)?;
        outcome.oracle_calls += 1;
        if verdict.success {
            outcome.success = true;
            outcome.survivors = current;
            outcome.last_verdict = Some(verdict);
            return Ok(outcome);
        }
        let (ids, reason) = match &verdict.syntax_error {
            Some(err) => (std::collections::BTreeSet::from([err.candidate]), PruneReason::Syntax),
            None if verdict.blamed.is_empty() => {
                // inductive but not sufficient; no subset can do better
                outcome.last_verdict = Some(verdict);
                break;
            }
            None => (verdict.blamed_ids(), PruneReason::Blamed),
        };
        let pruned = ids.iter().filter_map(|id| current.get(*id)).map(|c| c.source.clone()).collect();
        log::debug!("houdini iteration {iteration}: pruning {pruned:?} ({reason:?})");
        outcome.prune_trace.push(PruneStep { iteration, pruned, reason });
        current.remove_ids(&ids);
        outcome.last_verdict = Some(verdict);
    }
    Ok(outcome)
}
