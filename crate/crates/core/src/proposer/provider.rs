//! Completion providers.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::enumerate::enumerate_candidates;
use super::extract::render_block;
use super::{ProposerError, Purpose, Request};

pub trait Provider: Send + Sync {
    fn name(&self) -> String;

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError>;

    /// Requests served so far.
    fn calls(&self) -> usize;

    /// Requests that went over the network.
    fn network_calls(&self) -> usize {
        0
    }
}

/// Network-free stand-in for a model. Sample `i` of `N` answers with every
/// `N`th enumerated candidate starting at `i`, so the union of all samples
/// is the whole enumeration; repair rounds re-enumerate with a shifted seed.
pub struct OfflineProvider {
    pub budget: usize,
    calls: AtomicUsize,
}

impl OfflineProvider {
    pub fn new(budget: usize) -> Self {
        OfflineProvider { budget: budget.max(1), calls: AtomicUsize::new(0) }
    }
}

impl Default for OfflineProvider {
    fn default() -> Self {
        Self::new(200)
    }
}

impl Provider for OfflineProvider {
    fn name(&self) -> String {
        "offline".into()
    }

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let seed = request.config.seed;
        let sources: Vec<String> = match request.purpose {
            Purpose::Sample { total } => {
                let all = enumerate_candidates(request.program, seed, self.budget);
                let total = total.max(1);
                all.iter()
                    .enumerate()
                    .filter(|(j, _)| j % total == request.index % total)
                    .map(|(_, c)| c.source.clone())
                    .collect()
            }
            Purpose::Repair { round } => {
                enumerate_candidates(request.program, seed.wrapping_add(round as u64), self.budget)
                    .iter()
                    .map(|c| c.source.clone())
                    .collect()
            }
        };
        let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
        Ok(render_block(&refs))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Fixed responses handed out in call order; `Err` entries simulate
/// provider failures. Runs dry with an error.
pub struct ScriptedProvider {
    script: Mutex<VecDeque<Result<String, String>>>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(responses: impl IntoIterator<Item = Result<String, String>>) -> Self {
        ScriptedProvider { script: Mutex::new(responses.into_iter().collect()), calls: AtomicUsize::new(0) }
    }

    /// Each entry becomes a response with one code block.
    pub fn from_sets(sets: &[&[&str]]) -> Self {
        Self::new(sets.iter().map(|s| Ok(render_block(s))))
    }
}

impl Provider for ScriptedProvider {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, _request: &Request<'_>) -> Result<String, ProposerError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match self.script.lock().expect("script lock").pop_front() {
            Some(Ok(r)) => Ok(r),
            Some(Err(e)) => Err(ProposerError::Provider(e)),
            None => Err(ProposerError::Provider("script exhausted".into())),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// One line of a replay log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub benchmark: String,
    pub prompt_hash: String,
    pub index: usize,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_at_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

type ReplayKey = (String, String, usize);

/// Serves responses from a replay log, keyed by benchmark, prompt hash and
/// index. Never touches the network.
pub struct ReplayProvider {
    records: BTreeMap<ReplayKey, String>,
    calls: AtomicUsize,
}

impl ReplayProvider {
    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        let records = records.into_iter().map(|r| ((r.benchmark, r.prompt_hash, r.index), r.response)).collect();
        ReplayProvider { records, calls: AtomicUsize::new(0) }
    }

    pub fn load(path: &Path) -> Result<Self, ProposerError> {
        let file = File::open(path).map_err(|e| ProposerError::Provider(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ProposerError::Provider(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ReplayRecord = serde_json::from_str(&line)
                .map_err(|e| ProposerError::Provider(format!("{}:{}: {e}", path.display(), n + 1)))?;
            records.push(r);
        }
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn name(&self) -> String {
        "replay".into()
    }

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let key = (request.benchmark.to_string(), request.prompt_hash(), request.index);
        self.records.get(&key).cloned().ok_or(ProposerError::ReplayMiss {
            benchmark: key.0,
            prompt_hash: key.1,
            index: key.2,
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Wraps a provider and appends every successful exchange to a replay log.
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<File>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, path: &Path) -> Result<Self, ProposerError> {
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ProposerError::Provider(format!("{}: {e}", path.display())))?;
        Ok(RecordingProvider { inner, log: Mutex::new(log) })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError> {
        let requested_at_ms = now_ms();
        let response = self.inner.complete(request)?;
        let record = ReplayRecord {
            benchmark: request.benchmark.to_string(),
            prompt_hash: request.prompt_hash(),
            index: request.index,
            response: response.clone(),
            requested_at_ms: Some(requested_at_ms),
            latency_ms: Some(now_ms().saturating_sub(requested_at_ms)),
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        let mut log = self.log.lock().expect("log lock");
        writeln!(log, "{line}").map_err(|e| ProposerError::Provider(format!("writing replay log: {e}")))?;
        Ok(response)
    }

    fn calls(&self) -> usize {
        self.inner.calls()
    }

    fn network_calls(&self) -> usize {
        self.inner.network_calls()
    }
}

pub const API_KEY_VAR: &str = "LOOPY_API_KEY";
pub const BASE_URL_VAR: &str = "LOOPY_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

/// OpenAI-style chat completion endpoint.
pub struct HttpProvider {
    pub name: String,
    pub base_url: String,
    api_key: String,
    pub attempts: u32,
    agent: ureq::Agent,
    calls: AtomicUsize,
    network: AtomicUsize,
}

impl HttpProvider {
    /// Reads the key from `LOOPY_API_KEY` and the endpoint from
    /// `LOOPY_BASE_URL`. Fails before any network use when the key is unset.
    pub fn from_env(name: &str) -> Result<Self, ProposerError> {
        let api_key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ProposerError::Auth(API_KEY_VAR.into()))?;
        let base_url = std::env::var(BASE_URL_VAR).unwrap_or_else(|_| DEFAULT_BASE_URL.into());
        Ok(Self::new(name, &base_url, &api_key))
    }

    pub fn new(name: &str, base_url: &str, api_key: &str) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(300))).build().into();
        HttpProvider {
            name: name.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            attempts: 4,
            agent,
            calls: AtomicUsize::new(0),
            network: AtomicUsize::new(0),
        }
    }

    fn attempt(&self, request: &Request<'_>) -> Result<String, (bool, String)> {
        self.network.fetch_add(1, Ordering::Relaxed);
        let body = json!({
            "model": request.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.config.temperature,
            "max_tokens": request.config.max_tokens,
        });
        let url = format!("{}/chat/completions", self.base_url);
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| {
                let transient = match &e {
                    ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                    _ => true,
                };
                (transient, e.to_string())
            })?;
        let value: serde_json::Value = response.body_mut().read_json().map_err(|e| (false, e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, format!("unexpected response shape: {value}")))
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut delay = Duration::from_millis(500);
        let mut last = String::new();
        for attempt in 1..=self.attempts {
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err((transient, msg)) => {
                    log::warn!("{}: attempt {attempt} failed: {msg}", self.name);
                    last = msg;
                    if !transient {
                        break;
                    }
                    if attempt < self.attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(ProposerError::Provider(last))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn network_calls(&self) -> usize {
        self.network.load(Ordering::Relaxed)
    }
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn complete(&self, request: &Request<'_>) -> Result<String, ProposerError> {
        (**self).complete(request)
    }

    fn calls(&self) -> usize {
        (**self).calls()
    }

    fn network_calls(&self) -> usize {
        (**self).network_calls()
    }
}
