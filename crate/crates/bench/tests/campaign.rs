use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use loopy_bench::{load_results, recompute, run_campaign, CampaignConfig, RunStatus, UnionConfig};
use loopy_core::loopy::LoopyConfig;
use loopy_core::proposer::{OfflineProvider, Provider, RecordingProvider, ReplayProvider, ScriptedProvider};
use loopy_core::smt::default_checker;

fn paper(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/paper").join(name)
}

fn config(n: usize) -> CampaignConfig {
    CampaignConfig {
        loopy: LoopyConfig { n_samples: n, eager: true, ..LoopyConfig::default() },
        ..CampaignConfig::default()
    }
}

const TWO_LOOPS: &str =
    "int main() {\n  int x = 0;\n  while (x < 3) x++;\n  while (x > 0) x--;\n  //@ assert x == 0;\n}\n";
const NEGATIVE: &str = "int main() {\n  int x = 0;\n  while (x < 3) x++;\n  //@ assert x == 4;\n  return 0;\n}\n";
const GOTO: &str = "int main() {\n  int x = 0;\n  while (x < 3) { x++; goto out; }\n  out: return 0;\n}\n";

fn mixed_corpus(dir: &Path) {
    fs::copy(paper("intro.c"), dir.join("intro.c")).unwrap();
    fs::write(dir.join("two_loops.c"), TWO_LOOPS).unwrap();
    fs::write(dir.join("negative.c"), NEGATIVE).unwrap();
    fs::write(dir.join("goto.c"), GOTO).unwrap();
    fs::write(
        dir.join("manifest.toml"),
        "[benchmarks]\n\"intro.c\" = \"positive\"\n\"negative.c\" = \"negative\"\n\"two_loops.c\" = \"positive\"\n",
    )
    .unwrap();
}

#[test]
fn empty_corpus_gives_empty_report() {
    let corpus = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let provider = OfflineProvider::new(10);
    let report = run_campaign(corpus.path(), out.path(), &config(2), &provider, default_checker()).unwrap();
    assert_eq!(report.summary.benchmarks, 0);
    assert!(report.summary.curve.is_empty());
    for f in ["report.csv", "curves.csv", "solved_sets.json", "report.json"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    assert_eq!(provider.calls(), 0);
}

#[test]
fn missing_corpus_is_an_error() {
    let out = tempfile::tempdir().unwrap();
    let provider = OfflineProvider::new(10);
    let missing = out.path().join("nope");
    assert!(run_campaign(&missing, out.path(), &config(2), &provider, default_checker()).is_err());
}

#[test]
fn mixed_corpus_statuses_and_aggregates() {
    let corpus = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    mixed_corpus(corpus.path());
    // only intro.c runs: three completions, the last one verifies alone
    let provider = ScriptedProvider::from_sets(&[&["x >= 0"], &["x + y == n"], &["x + y == n", "x >= 0"]]);
    let mut cfg = config(3);
    cfg.union = Some(UnionConfig { trials: 20, seed: 7 });
    let report = run_campaign(corpus.path(), out.path(), &cfg, &provider, default_checker()).unwrap();

    let status = |id: &str| report.results.iter().find(|r| r.id == id).unwrap().status;
    assert_eq!(status("intro"), RunStatus::Ran);
    assert_eq!(status("two_loops"), RunStatus::Excluded);
    assert_eq!(status("negative"), RunStatus::Skipped);
    assert_eq!(status("goto"), RunStatus::Unsupported);
    let excluded = report.summary.not_run.iter().find(|n| n.id == "two_loops").unwrap();
    assert_eq!(excluded.reason, "loops");

    let s = &report.summary;
    assert_eq!((s.benchmarks, s.attempted), (4, 1));
    assert_eq!((s.solved.completion, s.solved.houdini, s.solved.repair), (1, 1, 1));
    assert_eq!(s.curve.len(), 3);
    assert!((s.curve[0].pass_at_k - 1.0 / 3.0).abs() < 1e-12);
    assert!((s.curve[2].pass_at_k - 1.0).abs() < 1e-12);
    // the union of the first two completions already suffices for Houdini
    let union: Vec<f64> = s.curve.iter().map(|p| p.union_houdini.unwrap()).collect();
    assert!(union[0] >= 0.0 && union[1] >= s.curve[1].pass_at_k);
    assert_eq!(union[2], 1.0);

    assert_eq!(recompute(out.path()).unwrap(), report.summary);
    assert_eq!(load_results(out.path()).unwrap(), report.results);
    let csv = fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().next().unwrap().starts_with("schema,benchmark,"));
    let solved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("solved_sets.json")).unwrap()).unwrap();
    assert_eq!(solved["completion"], serde_json::json!(["intro"]));
    assert_eq!(solved["prompt"], "M2");
}

#[test]
fn replayed_campaigns_reproduce_the_report() {
    let corpus = tempfile::tempdir().unwrap();
    fs::copy(paper("intro.c"), corpus.path().join("intro.c")).unwrap();
    let log_dir = tempfile::tempdir().unwrap();
    let log = log_dir.path().join("replay.jsonl");

    let recorded = tempfile::tempdir().unwrap();
    let recorder = RecordingProvider::new(OfflineProvider::new(30), &log).unwrap();
    let first = run_campaign(corpus.path(), recorded.path(), &config(3), &recorder, default_checker()).unwrap();

    let mut csvs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let replay = ReplayProvider::load(&log).unwrap();
        let report = run_campaign(corpus.path(), out.path(), &config(3), &replay, default_checker()).unwrap();
        assert_eq!(replay.network_calls(), 0);
        assert_eq!(replay.calls(), 3);
        assert_eq!(report.summary.solved, first.summary.solved);
        csvs.push(fs::read(out.path().join("report.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let original = fs::read_to_string(recorded.path().join("report.csv")).unwrap();
    // identical apart from the provider name column
    assert_eq!(String::from_utf8(csvs[0].clone()).unwrap().replace(",replay,", ",offline,"), original);
}

#[test]
fn workers_do_not_change_results() {
    let corpus = tempfile::tempdir().unwrap();
    mixed_corpus(corpus.path());
    fs::copy(paper("intro.c"), corpus.path().join("intro_copy.c")).unwrap();
    let checker = Arc::new(loopy_core::smt::CachedChecker::new(loopy_core::smt::SolverChecker::new(
        loopy_core::smt::SolverConfig::from_env(),
    )));
    let mut csvs = Vec::new();
    for workers in [1, 3] {
        let out = tempfile::tempdir().unwrap();
        let provider = OfflineProvider::new(20);
        let cfg = CampaignConfig { workers, ..config(2) };
        run_campaign(corpus.path(), out.path(), &cfg, &provider, checker.clone()).unwrap();
        csvs.push(fs::read(out.path().join("report.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}
