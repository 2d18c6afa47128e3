//! Monte Carlo estimate of running Houdini on the union of `k` sampled
//! completions.

use std::collections::HashMap;

use loopy_core::houdini::houdini;
use loopy_core::lang::CandidateSet;
use loopy_core::loopy::SessionRecord;
use loopy_core::oracle::InvariantOracle;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

/// Samples subsets of one session's completions. Outcomes are memoized by
/// the union's candidate keys, so repeated unions cost nothing.
pub struct UnionSampler<'a> {
    sets: Vec<&'a CandidateSet>,
    oracle: &'a dyn InvariantOracle,
    memo: HashMap<Vec<String>, bool>,
    houdini_runs: usize,
}

impl<'a> UnionSampler<'a> {
    pub fn new(session: &'a SessionRecord, oracle: &'a dyn InvariantOracle) -> Self {
        UnionSampler {
            sets: session.completions.iter().map(|c| &c.candidates).collect(),
            oracle,
            memo: HashMap::new(),
            houdini_runs: 0,
        }
    }

    pub fn completions(&self) -> usize {
        self.sets.len()
    }

    /// Houdini runs actually performed.
    pub fn houdini_runs(&self) -> usize {
        self.houdini_runs
    }

    /// Whether Houdini succeeds on the union of the given completions.
    pub fn union_succeeds(&mut self, indices: &[usize]) -> Result<bool, BenchError> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let union = CandidateSet::union(sorted.iter().map(|&i| self.sets[i]));
        let mut key = union.keys();
        key.sort();
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let ok = if union.is_empty() {
            self.oracle.check(&union).map_err(|e| BenchError::Oracle(e.to_string()))?.success
        } else {
            self.houdini_runs += 1;
            houdini(self.oracle, &union).map_err(|e| BenchError::Oracle(e.to_string()))?.success
        };
        self.memo.insert(key, ok);
        Ok(ok)
    }

    /// Success fraction over `trials` uniform `k`-subsets.
    pub fn rate(&mut self, k: usize, trials: usize, seed: u64) -> Result<f64, BenchError> {
        let n = self.sets.len();
        if trials == 0 {
            return Err(BenchError::Domain("union-Houdini rate needs at least one trial".into()));
        }
        if k == 0 || k > n {
            return Err(BenchError::Domain(format!("union-Houdini rate needs 1 <= k <= {n}, got k={k}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..trials {
            let chosen = sample(&mut rng, n, k).into_vec();
            if self.union_succeeds(&chosen)? {
                hits += 1;
            }
        }
        Ok(hits as f64 / trials as f64)
    }
}

/// One-shot form of [`UnionSampler::rate`].
pub fn union_houdini_rate(
    session: &SessionRecord,
    oracle: &dyn InvariantOracle,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64, BenchError> {
    UnionSampler::new(session, oracle).rate(k, trials, seed)
}
