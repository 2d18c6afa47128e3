mod common;

use loopy_core::lang::CandidateSet;
use loopy_core::oracle::InvariantOracle;
use loopy_core::proposer::{render_block, GenerationConfig, PromptTemplate, Provider, ScriptedProvider};
use loopy_core::repair::{render_feedback, repair, RepairContext};

use common::{oracle, program};

const EX_1_1: [&str; 5] = ["1 <= x <= 11", "y == 10 - x", "0 <= y <= 9", "y == 10 - (x - 1)", "y < 10"];
const EX_1_2: [&str; 2] = ["(x == 1 || y == 10 - x + 1)", "(x == 1 || y < 10)"];

fn set(sources: &[&str]) -> CandidateSet {
    CandidateSet::from_sources(sources.iter().copied())
}

#[test]
fn fixed_set_on_round_four() {
    let p = program("example1.c");
    let o = oracle(&p);
    let provider = ScriptedProvider::new([
        Ok(render_block(&EX_1_1)),
        Ok("I could not find anything better.".to_string()),
        Err("rate limited".to_string()),
        Ok(format!("Let's think step by step.\n{}", render_block(&EX_1_2))),
    ]);
    let template = PromptTemplate::mr();
    let config = GenerationConfig::default();
    let ctx = RepairContext {
        benchmark: "example1",
        program: &p,
        oracle: &o,
        provider: &provider,
        template: &template,
        config: &config,
    };
    let r = repair(&ctx, &set(&EX_1_1), 7).unwrap();
    assert!(r.success);
    assert_eq!(r.rounds_used, 4);
    assert_eq!(provider.calls(), 4);
    assert!(r.transcript[2].provider_error.is_some());
    assert!(o.check(&r.invariants).unwrap().success);
}

#[test]
fn zero_rounds() {
    let p = program("example1.c");
    let o = oracle(&p);
    let provider = ScriptedProvider::new([]);
    let template = PromptTemplate::mr();
    let config = GenerationConfig::default();
    let ctx = RepairContext {
        benchmark: "example1",
        program: &p,
        oracle: &o,
        provider: &provider,
        template: &template,
        config: &config,
    };
    let r = repair(&ctx, &set(&EX_1_1), 0).unwrap();
    assert!(!r.success && r.invariants.is_empty());
    assert_eq!((r.oracle_calls, r.provider_calls, provider.calls()), (1, 0, 0));
}

#[test]
fn good_set_on_round_one() {
    let p = program("intro.c");
    let o = oracle(&p);
    let provider = ScriptedProvider::from_sets(&[&["x + y == n", "x >= 0"]]);
    let template = PromptTemplate::mr();
    let config = GenerationConfig::default();
    let ctx = RepairContext {
        benchmark: "intro",
        program: &p,
        oracle: &o,
        provider: &provider,
        template: &template,
        config: &config,
    };
    let r = repair(&ctx, &set(&["y > 0"]), 3).unwrap();
    assert!(r.success);
    assert_eq!(r.rounds_used, 1);
    assert!(r.transcript[0].feedback.contains("invariant y > 0: established=no"));
}

#[test]
fn feedback_flags_match_obligations() {
    let p = program("example1.c");
    let v = oracle(&p).check(&set(&EX_1_1)).unwrap();
    let text = render_feedback(&v);
    for s in &v.statuses {
        let yn = |b: bool| if b { "yes" } else { "no" };
        let line = format!("invariant {}: established={}, preserved={}", s.source, yn(s.established), yn(s.preserved));
        if v.blamed_ids().contains(&s.id) {
            assert!(text.contains(&line), "missing `{line}` in\n{text}");
        } else {
            assert!(text.contains(&format!("invariant {}: partially proven", s.source)));
        }
    }
}

#[test]
fn unproven_assertions_are_listed() {
    let p = program("intro.c");
    let v = oracle(&p).check(&set(&["x >= 0"])).unwrap();
    assert!(render_feedback(&v).contains("Unproven: assertion y == n"));
}
