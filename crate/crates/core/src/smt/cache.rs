use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::vcgen::VerificationCondition;

use super::emit::emit_smtlib;
use super::{CheckResult, Checker, SmtError};

/// Memoizes results by (scope, hash of the rendered script). Resampling
/// experiments re-check the same obligations many times.
pub struct CachedChecker<C> {
    inner: C,
    entries: Mutex<HashMap<(String, [u8; 32]), CheckResult>>,
    hits: AtomicUsize,
}

impl<C: Checker> CachedChecker<C> {
    pub fn new(inner: C) -> Self {
        CachedChecker { inner, entries: Mutex::new(HashMap::new()), hits: AtomicUsize::new(0) }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: Checker> Checker for CachedChecker<C> {
    fn check(&self, scope: &str, vc: &VerificationCondition) -> Result<CheckResult, SmtError> {
        let digest: [u8; 32] = Sha256::digest(emit_smtlib(vc).as_bytes()).into();
        let key = (scope.to_string(), digest);
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit.clone());
        }
        let result = self.inner.check(scope, vc)?;
        self.entries.lock().expect("cache lock").insert(key, result.clone());
        Ok(result)
    }

    fn solver_queries(&self) -> usize {
        self.inner.solver_queries()
    }
}
