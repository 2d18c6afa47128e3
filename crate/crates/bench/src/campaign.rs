//! Campaigns: run loopy over every supported benchmark of a corpus and
//! write per-benchmark records plus aggregate reports.
//!
//! Output layout under the output directory:
//!
//! - `sessions/<id>.json`: one [`BenchmarkResult`] per corpus file
//! - `report.csv`: one row per benchmark, no timings
//! - `curves.csv`: expected solved count against `k`
//! - `solved_sets.json`: solved benchmark ids per mode
//! - `report.json`: the [`CampaignSummary`]

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use loopy_core::loopy::{loopy, LoopyConfig, Session, SessionRecord, Stage};
use loopy_core::oracle::ProgramOracle;
use loopy_core::proposer::Provider;
use loopy_core::smt::Checker;
use loopy_core::vcgen::IntSemantics;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::categorize::Category;
use crate::corpus::{ingest, read, BenchmarkEntry, Expected};
use crate::passk::pass_at_k;
use crate::union::UnionSampler;
use crate::BenchError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Monte Carlo settings for union-then-Houdini curves. Trial `k` is seeded
/// with `seed + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for UnionConfig {
    fn default() -> Self {
        UnionConfig { trials: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Sessions always run eagerly so every completion has a verdict.
    pub loopy: LoopyConfig,
    pub semantics: IntSemantics,
    pub workers: usize,
    pub union: Option<UnionConfig>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            loopy: LoopyConfig { eager: true, ..LoopyConfig::default() },
            semantics: IntSemantics::Unbounded,
            workers: 1,
            union: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Outside the single-loop slice.
    Excluded,
    /// In the slice but rejected by the parser.
    Unsupported,
    /// Negative instance, not attempted.
    Skipped,
    Ran,
    /// The session hit an infrastructure error and did not succeed.
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionPoint {
    pub k: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub schema_version: u32,
    pub id: String,
    pub path: String,
    pub expected: Expected,
    pub category: Category,
    pub status: RunStatus,
    pub reason: Option<String>,
    pub session: Option<SessionRecord>,
    #[serde(default)]
    pub union_houdini: Vec<UnionPoint>,
}

impl BenchmarkResult {
    fn new(entry: &BenchmarkEntry, status: RunStatus, reason: Option<String>) -> Self {
        BenchmarkResult {
            schema_version: REPORT_SCHEMA_VERSION,
            id: entry.id.clone(),
            path: entry.path.clone(),
            expected: entry.expected,
            category: entry.category,
            status,
            reason,
            session: None,
            union_houdini: Vec::new(),
        }
    }

    pub fn attempted(&self) -> bool {
        matches!(self.status, RunStatus::Ran | RunStatus::Failed)
    }

    /// Completions drawn.
    pub fn n(&self) -> usize {
        self.session.as_ref().map_or(0, |s| s.completions.len())
    }

    /// Completions that verified on their own.
    pub fn c(&self) -> usize {
        self.session.as_ref().map_or(0, SessionRecord::successful_completions)
    }

    pub fn solved_by_completion(&self) -> bool {
        self.c() > 0
    }

    pub fn solved_with_houdini(&self) -> bool {
        self.solved_by_completion() || self.session.as_ref().is_some_and(|s| s.solved_by == Some(Stage::Houdini))
    }

    pub fn solved(&self) -> bool {
        self.session.as_ref().is_some_and(|s| s.success)
    }

    fn union_rate(&self, k: usize) -> Option<f64> {
        self.union_houdini.iter().find(|p| p.k == k).map(|p| p.rate)
    }
}

/// Identifies a campaign; stored in `report.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub prompt: String,
    pub provider: String,
    pub union: Option<UnionConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedCounts {
    /// Some completion verified as is.
    pub completion: usize,
    /// ... or Houdini on the union did.
    pub houdini: usize,
    /// ... or repair did.
    pub repair: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedSets {
    pub completion: Vec<String>,
    pub houdini: Vec<String>,
    pub repair: Vec<String>,
}

/// Expected number of benchmarks solved from `k` completions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub pass_at_k: f64,
    pub union_houdini: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotRun {
    pub id: String,
    pub status: RunStatus,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub schema_version: u32,
    #[serde(flatten)]
    pub meta: CampaignMeta,
    pub benchmarks: usize,
    pub attempted: usize,
    pub failed: usize,
    pub not_run: Vec<NotRun>,
    pub solved: SolvedCounts,
    pub curve: Vec<CurvePoint>,
    pub solved_sets: SolvedSets,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignReport {
    pub summary: CampaignSummary,
    pub results: Vec<BenchmarkResult>,
}

/// Aggregates as a function of the per-benchmark results.
pub fn aggregate(meta: &CampaignMeta, results: &[BenchmarkResult]) -> Result<CampaignSummary, BenchError> {
    let attempted: Vec<&BenchmarkResult> = results.iter().filter(|r| r.attempted()).collect();
    let ids = |pred: fn(&BenchmarkResult) -> bool| -> Vec<String> {
        attempted.iter().filter(|r| pred(r)).map(|r| r.id.clone()).collect()
    };
    let solved_sets = SolvedSets {
        completion: ids(BenchmarkResult::solved_by_completion),
        houdini: ids(BenchmarkResult::solved_with_houdini),
        repair: ids(BenchmarkResult::solved),
    };
    let max_n = attempted.iter().map(|r| r.n()).max().unwrap_or(0);
    let mut curve = Vec::with_capacity(max_n);
    for k in 1..=max_n {
        let mut pass = 0.0;
        let mut union = Some(0.0);
        for r in attempted.iter().filter(|r| r.n() > 0) {
            let kk = k.min(r.n());
            pass += pass_at_k(r.n(), r.c(), kk)?;
            union = union.zip(r.union_rate(kk)).map(|(a, b)| a + b);
        }
        curve.push(CurvePoint { k, pass_at_k: pass, union_houdini: union.filter(|_| meta.union.is_some()) });
    }
    Ok(CampaignSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        meta: meta.clone(),
        benchmarks: results.len(),
        attempted: attempted.len(),
        failed: results.iter().filter(|r| r.status == RunStatus::Failed).count(),
        not_run: results
            .iter()
            .filter(|r| !r.attempted())
            .map(|r| NotRun { id: r.id.clone(), status: r.status, reason: r.reason.clone().unwrap_or_default() })
            .collect(),
        solved: SolvedCounts {
            completion: solved_sets.completion.len(),
            houdini: solved_sets.houdini.len(),
            repair: solved_sets.repair.len(),
        },
        curve,
        solved_sets,
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Run one benchmark. Never fails; problems end up in the result.
pub fn run_benchmark(
    entry: &BenchmarkEntry,
    config: &CampaignConfig,
    provider: &dyn Provider,
    checker: &Arc<dyn Checker>,
) -> BenchmarkResult {
    if let Some(x) = entry.category.exclusion() {
        return BenchmarkResult::new(entry, RunStatus::Excluded, Some(x.to_string()));
    }
    if let Some(e) = &entry.parse_error {
        return BenchmarkResult::new(entry, RunStatus::Unsupported, Some(e.clone()));
    }
    if entry.expected == Expected::Negative {
        return BenchmarkResult::new(entry, RunStatus::Skipped, Some("negative instance".into()));
    }
    let Some(program) = entry.program() else {
        return BenchmarkResult::new(entry, RunStatus::Unsupported, Some("does not parse".into()));
    };
    let oracle = ProgramOracle::new(program.clone(), checker.clone(), config.semantics);
    let loopy_config = LoopyConfig { eager: true, ..config.loopy.clone() };
    let run = catch_unwind(AssertUnwindSafe(|| {
        let session = Session { benchmark: &entry.id, program: &program, oracle: &oracle, provider };
        loopy(&session, &loopy_config)
    }));
    let record = match run {
        Ok(r) => r,
        Err(p) => return BenchmarkResult::new(entry, RunStatus::Failed, Some(panic_message(p))),
    };
    let mut result = if record.error.is_some() && !record.success {
        BenchmarkResult::new(entry, RunStatus::Failed, record.error.clone())
    } else {
        BenchmarkResult::new(entry, RunStatus::Ran, None)
    };
    if let Some(u) = config.union {
        let mut sampler = UnionSampler::new(&record, &oracle);
        for k in 1..=sampler.completions() {
            match sampler.rate(k, u.trials, u.seed.wrapping_add(k as u64)) {
                Ok(rate) => result.union_houdini.push(UnionPoint { k, rate }),
                Err(e) => {
                    log::warn!("{}: union-Houdini at k={k}: {e}", entry.id);
                    result.union_houdini.clear();
                    result.reason = Some(e.to_string());
                    break;
                }
            }
        }
    }
    result.session = Some(record);
    result
}

/// Ingest `corpus`, run every supported benchmark that is not a known
/// negative instance, and write the reports under `out`.
pub fn run_campaign(
    corpus: &Path,
    out: &Path,
    config: &CampaignConfig,
    provider: &dyn Provider,
    checker: Arc<dyn Checker>,
) -> Result<CampaignReport, BenchError> {
    let entries = ingest(corpus)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| BenchError::Domain(e.to_string()))?;
    let results: Vec<BenchmarkResult> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                log::info!("{}: starting", e.id);
                let r = run_benchmark(e, config, provider, &checker);
                log::info!("{}: {:?}, solved={}", e.id, r.status, r.solved());
                r
            })
            .collect()
    });
    let meta =
        CampaignMeta { prompt: config.loopy.prompt.name.clone(), provider: provider.name(), union: config.union };
    let summary = aggregate(&meta, &results)?;
    write_outputs(out, &summary, &results)?;
    Ok(CampaignReport { summary, results })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialize");
    v.push(b'\n');
    v
}

#[derive(Serialize)]
struct ReportRow<'a> {
    schema: u32,
    benchmark: &'a str,
    path: &'a str,
    expected: String,
    loops: &'static str,
    methods: &'static str,
    status: &'static str,
    reason: &'a str,
    prompt: &'a str,
    provider: &'a str,
    n: usize,
    c: usize,
    first_success: String,
    solved_by: &'static str,
    success: bool,
    oracle_calls: usize,
    provider_calls: usize,
    invariants: String,
}

#[derive(Serialize)]
struct CurveRow {
    schema: u32,
    k: usize,
    pass_at_k: f64,
    pass_at_k_rate: f64,
    union_houdini: Option<f64>,
    union_houdini_rate: Option<f64>,
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Excluded => "excluded",
        RunStatus::Unsupported => "unsupported",
        RunStatus::Skipped => "skipped",
        RunStatus::Ran => "ran",
        RunStatus::Failed => "failed",
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| BenchError::Report(e.to_string()))?;
    }
    w.into_inner().map_err(|e| BenchError::Report(e.to_string()))
}

/// Write all report files. Old session files under `out` are replaced.
pub fn write_outputs(out: &Path, summary: &CampaignSummary, results: &[BenchmarkResult]) -> Result<(), BenchError> {
    let sessions = out.join("sessions");
    fs::create_dir_all(&sessions).map_err(|e| BenchError::io(&sessions, e))?;
    for old in fs::read_dir(&sessions).map_err(|e| BenchError::io(&sessions, e))? {
        let old = old.map_err(|e| BenchError::io(&sessions, e))?.path();
        if old.extension().is_some_and(|x| x == "json") {
            fs::remove_file(&old).map_err(|e| BenchError::io(&old, e))?;
        }
    }
    for r in results {
        write_file(&sessions.join(format!("{}.json", r.id)), &to_json(r))?;
    }

    let rows = results.iter().map(|r| {
        let s = r.session.as_ref();
        ReportRow {
            schema: REPORT_SCHEMA_VERSION,
            benchmark: &r.id,
            path: &r.path,
            expected: r.expected.to_string(),
            loops: r.category.loop_class(),
            methods: r.category.method_class(),
            status: status_name(r.status),
            reason: r.reason.as_deref().unwrap_or(""),
            prompt: &summary.meta.prompt,
            provider: &summary.meta.provider,
            n: r.n(),
            c: r.c(),
            first_success: s.and_then(|s| s.first_success).map_or(String::new(), |i| i.to_string()),
            solved_by: match s.and_then(|s| s.solved_by) {
                Some(Stage::Completion) => "completion",
                Some(Stage::Houdini) => "houdini",
                Some(Stage::Repair) => "repair",
                None => "",
            },
            success: r.solved(),
            oracle_calls: s.map_or(0, |s| s.counters.oracle_calls),
            provider_calls: s.map_or(0, |s| s.counters.provider_calls),
            invariants: s.map_or(String::new(), |s| s.invariants.sources().join(" && ")),
        }
    });
    write_file(&out.join("report.csv"), &csv_bytes(rows)?)?;

    let attempted = summary.attempted.max(1) as f64;
    let curve = summary.curve.iter().map(|p| CurveRow {
        schema: REPORT_SCHEMA_VERSION,
        k: p.k,
        pass_at_k: p.pass_at_k,
        pass_at_k_rate: p.pass_at_k / attempted,
        union_houdini: p.union_houdini,
        union_houdini_rate: p.union_houdini.map(|u| u / attempted),
    });
    write_file(&out.join("curves.csv"), &csv_bytes(curve)?)?;

    #[derive(Serialize)]
    struct SolvedFile<'a> {
        schema_version: u32,
        prompt: &'a str,
        provider: &'a str,
        #[serde(flatten)]
        sets: &'a SolvedSets,
    }
    let solved = SolvedFile {
        schema_version: REPORT_SCHEMA_VERSION,
        prompt: &summary.meta.prompt,
        provider: &summary.meta.provider,
        sets: &summary.solved_sets,
    };
    write_file(&out.join("solved_sets.json"), &to_json(&solved))?;
    write_file(&out.join("report.json"), &to_json(summary))
}

/// Per-benchmark results from `out/sessions`, sorted by id.
pub fn load_results(out: &Path) -> Result<Vec<BenchmarkResult>, BenchError> {
    let sessions = out.join("sessions");
    let mut paths: Vec<_> = fs::read_dir(&sessions)
        .map_err(|e| BenchError::io(&sessions, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut results: Vec<BenchmarkResult> = paths
        .iter()
        .map(|p| serde_json::from_str(&read(p)?).map_err(|e| BenchError::Report(format!("{}: {e}", p.display()))))
        .collect::<Result<_, _>>()?;
    results.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(results)
}

/// Rebuild the summary from the files under `out`.
pub fn recompute(out: &Path) -> Result<CampaignSummary, BenchError> {
    let path = out.join("report.json");
    let stored: CampaignSummary =
        serde_json::from_str(&read(&path)?).map_err(|e| BenchError::Report(format!("{}: {e}", path.display())))?;
    aggregate(&stored.meta, &load_results(out)?)
}
