mod common;

use proptest::prelude::*;

use loopy_core::lang::eval::{eval_bool_bounded, Env};
use loopy_core::lang::{parse_expr, parse_program, print_expr, CandidateInvariant, CandidateSet, Expr, Stmt};
use loopy_core::smt::{check_validity, SolverConfig, Status};
use loopy_core::vcgen::{
    establishment_vc, preservation_vc, sufficiency_vc, wp, IntSemantics, VcError, VerificationCondition,
};

use common::program;

const U: IntSemantics = IntSemantics::Unbounded;

fn cand(id: usize, src: &str) -> CandidateInvariant {
    CandidateInvariant::new(id, src)
}

fn status(vc: &VerificationCondition) -> Status {
    check_validity(vc, &SolverConfig::from_env()).unwrap().status
}

#[test]
fn wp_substitutes_through_a_sequence() {
    let s = Stmt::seq([
        Stmt::Assign("x".into(), Expr::sub(Expr::var("x"), Expr::int(1))),
        Stmt::Assign("y".into(), Expr::add(Expr::var("y"), Expr::int(1))),
    ]);
    assert_eq!(print_expr(&wp(&s, &parse_expr("x + y == n").unwrap())), "x - 1 + (y + 1) == n");
}

#[test]
fn establishment_examples() {
    let p = program("intro.c");
    assert_eq!(status(&establishment_vc(&p, &cand(0, "x + y == n"), U).unwrap()), Status::Proved);
    match status(&establishment_vc(&p, &cand(1, "y > 0"), U).unwrap()) {
        Status::Refuted { .. } => {}
        other => panic!("{other:?}"),
    }
    let ex1 = program("example1.c");
    assert!(matches!(status(&establishment_vc(&ex1, &cand(0, "y == 10 - x"), U).unwrap()), Status::Refuted { .. }));
    assert_eq!(establishment_vc(&p, &cand(3, "x +* y"), U).unwrap_err(), VcError::MissingExpr(3));
}

#[test]
fn preservation_examples() {
    let p = program("intro.c");
    let all = CandidateSet::from_sources(["x + y == n", "x >= 0"]);
    let t = all.iter().next().unwrap();
    assert_eq!(status(&preservation_vc(&p, &all, t, U).unwrap()), Status::Proved);

    let all = CandidateSet::from_sources(["x >= 5"]);
    match status(&preservation_vc(&p, &all, all.iter().next().unwrap(), U).unwrap()) {
        Status::Refuted { model } => assert_eq!(model["x"], 5.into()),
        other => panic!("{other:?}"),
    }

    let ex1 = program("example1.c");
    let all = CandidateSet::from_sources(["x == 1 || y == 10 - x + 1", "x == 1 || y < 10"]);
    for t in &all {
        assert_eq!(status(&preservation_vc(&ex1, &all, t, U).unwrap()), Status::Proved, "{}", t.source);
    }
}

#[test]
fn sufficiency_examples() {
    let p = program("intro.c");
    let vcs = sufficiency_vc(&p, &CandidateSet::from_sources(["x + y == n", "x >= 0"]), U);
    assert_eq!(vcs.len(), 1);
    assert_eq!(status(&vcs[0]), Status::Proved);

    let l5 = program("listing5.c");
    let vcs = sufficiency_vc(&l5, &CandidateSet::from_sources(["k <= 1000000", "k <= i"]), U);
    assert!(vcs.iter().all(|vc| status(vc) == Status::Proved));

    let bare = parse_program("int main() { int x = 0; while (x < 3) { x++; } return 0; }").unwrap();
    assert!(sufficiency_vc(&bare, &CandidateSet::new(), U).is_empty());
}

#[test]
fn unparsed_candidates_stay_out_of_hypotheses() {
    let p = program("intro.c");
    let all = CandidateSet::from_sources(["x + y == n", "x ++ y"]);
    let vc = preservation_vc(&p, &all, all.iter().next().unwrap(), U).unwrap();
    assert_eq!(vc.provenance, vec![0]);
}

#[test]
fn body_assertions_get_their_own_vc() {
    let p = parse_program("int main() { int i = 0; while (i < 10) { //@ assert i >= 0;\n i++; } return 0; }").unwrap();
    let vcs = sufficiency_vc(&p, &CandidateSet::from_sources(["i >= 0"]), U);
    assert_eq!(vcs.len(), 1);
    assert_eq!(status(&vcs[0]), Status::Proved);
}

fn holds_on_grid(e: &Expr) -> bool {
    let vars = e.free_vars();
    let mut envs = vec![Env::new()];
    for v in &vars {
        envs = envs
            .into_iter()
            .flat_map(|env| {
                (-4i64..=4).map(move |val| {
                    let mut env = env.clone();
                    env.insert(v.clone(), val.into());
                    env
                })
            })
            .collect();
    }
    envs.iter().all(|env| eval_bool_bounded(e, env, -4, 4).unwrap())
}

const POOL: [&str; 8] = ["x + y == n", "x >= 0", "y >= 0", "y <= n", "x <= n", "y > 0", "x < n", "n >= 0"];

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// A stronger hypothesis never breaks a preservation VC that held.
    #[test]
    fn more_hypotheses_never_hurt(mask in 0u8..=255, extra in 0usize..8, target in 0usize..8) {
        let p = program("intro.c");
        let chosen: Vec<&str> = POOL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s).collect();
        let mut all = CandidateSet::from_sources(chosen.iter().copied());
        let t = cand(0, POOL[target]);
        let before = preservation_vc(&p, &all, &t, U).unwrap().formula();
        all.push_source(POOL[extra]);
        let after = preservation_vc(&p, &all, &t, U).unwrap().formula();
        if holds_on_grid(&before) {
            prop_assert!(holds_on_grid(&after));
        }
    }
}
