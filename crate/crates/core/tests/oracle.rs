mod common;

use loopy_core::explore::{explore, ExploreConfig};
use loopy_core::lang::CandidateSet;
use loopy_core::oracle::InvariantOracle;
use loopy_core::smt::Status;
use loopy_core::vcgen::VcKind;

use common::{oracle, program};

fn set(sources: &[&str]) -> CandidateSet {
    CandidateSet::from_sources(sources.iter().copied())
}

#[test]
fn intro_invariant_verifies() {
    let p = program("intro.c");
    let v = oracle(&p).check(&set(&["x + y == n", "x >= 0"])).unwrap();
    assert!(v.success, "{v:#?}");
    assert!(v.blamed.is_empty() && v.syntax_error.is_none());
    assert!(explore(&p, &set(&["x + y == n", "x >= 0"]), &ExploreConfig::default()).unwrap().is_clean());
}

#[test]
fn unestablished_candidate_is_blamed() {
    let p = program("intro.c");
    let v = oracle(&p).check(&set(&["x + y == n", "x >= 0", "y > 0"])).unwrap();
    assert!(!v.success);
    assert_eq!(v.blamed.sources(), ["y > 0"]);
    let est = v.obligations.iter().find(|o| o.kind == VcKind::Establishment(2)).expect("establishment of y > 0");
    // y is 0 at loop entry whatever n is
    assert!(matches!(est.result.status, Status::Refuted { .. }), "{:?}", est.result.status);
}

#[test]
fn inductive_but_insufficient() {
    let p = program("intro.c");
    let v = oracle(&p).check(&set(&["x >= 0"])).unwrap();
    assert!(!v.success && v.blamed.is_empty());
    assert!(v.inductive_but_insufficient());
    assert_eq!(v.unproven.len(), 1);
    assert_eq!(v.unproven[0].assertion, "y == n");
}

#[test]
fn dropping_either_conjunct_fails() {
    let p = program("intro.c");
    let o = oracle(&p);
    assert!(!o.check(&set(&["x + y == n"])).unwrap().success);
    assert!(!o.check(&set(&["x >= 0"])).unwrap().success);
}

#[test]
fn first_syntax_error_is_reported_alone() {
    let p = program("intro.c");
    let v = oracle(&p).check(&set(&["x + y == n", "x ++ y == n", "z > 0"])).unwrap();
    let err = v.syntax_error.expect("syntax error");
    assert_eq!(err.source, "x ++ y == n");
    assert!(v.blamed.is_empty() && !v.success && v.obligations.is_empty());

    let v = oracle(&p).check(&set(&["x >= 0", "z > 0"])).unwrap();
    assert_eq!(v.syntax_error.unwrap().message, "unbound logic variable z");
}

#[test]
fn example_one_candidates_are_not_established() {
    let p = program("example1.c");
    let ex11 = set(&["1 <= x <= 11", "y == 10 - x", "0 <= y <= 9", "y == 10 - (x - 1)", "y < 10"]);
    let v = oracle(&p).check(&ex11).unwrap();
    assert!(!v.success);
    for src in ["y == 10 - x", "0 <= y <= 9"] {
        assert!(v.blamed.sources().contains(&src), "{src} not blamed: {:?}", v.blamed.sources());
    }
    for s in &v.statuses {
        if s.source.contains('y') {
            assert!(!s.established, "{} should not be established", s.source);
        }
    }
}

#[test]
fn example_one_repaired_set_verifies() {
    let p = program("example1.c");
    let v = oracle(&p).check(&set(&["x == 1 || y == 10 - x + 1", "x == 1 || y < 10"])).unwrap();
    assert!(v.success, "{v:#?}");
}

#[test]
fn listing_invariants_verify() {
    assert!(oracle(&program("listing4.c")).check(&set(&["x + y == n", "x >= 0"])).unwrap().success);
    assert!(oracle(&program("listing5.c")).check(&set(&["k <= 1000000", "k <= i"])).unwrap().success);
}

#[test]
fn query_budget() {
    let p = program("intro.c");
    let c = set(&["x + y == n", "x >= 0", "y >= 0", "x <= n"]);
    let v = oracle(&p).check(&c).unwrap();
    assert!(v.obligations.len() <= 2 * c.len() + p.post().len() + p.body_assertions().len());
}

#[test]
fn parallel_and_sequential_agree() {
    let p = program("intro.c");
    let c = set(&["x + y == n", "x >= 0", "y > 0", "x < n", "y <= n"]);
    let a = oracle(&p).check(&c).unwrap();
    let b = oracle(&p).sequential().check(&c).unwrap();
    assert_eq!(a.blamed, b.blamed);
    assert_eq!(a.statuses, b.statuses);
}
