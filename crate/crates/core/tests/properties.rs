mod common;

use proptest::prelude::*;

use loopy_core::lang::eval::{eval_bool_bounded, exec, Env, ExecConfig, Outcome};
use loopy_core::lang::{
    parse_expr, parse_program, pretty_print, print_expr, BinaryOp, CandidateSet, Expr, Location, NondetKind, Stmt,
    UnaryOp,
};
use loopy_core::proposer::{enumerate_candidates, extract_invariants, render_block};
use loopy_core::vcgen::wp;

const VARS: [&str; 3] = ["x", "y", "n"];

fn int_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-9i64..=9).prop_map(Expr::Int), prop::sample::select(&VARS[..]).prop_map(Expr::var),];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
            (
                prop::sample::select(vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Mod]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn bool_expr() -> impl Strategy<Value = Expr> {
    let cmp = (
        prop::sample::select(vec![BinaryOp::Eq, BinaryOp::Ne, BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge]),
        int_expr(),
        int_expr(),
    )
        .prop_map(|(op, a, b)| Expr::binary(op, a, b));
    cmp.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (prop::sample::select(vec![BinaryOp::And, BinaryOp::Or, BinaryOp::Implies]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

/// Loop-free statements over x and y with no division by variables.
fn stmt() -> impl Strategy<Value = Stmt> {
    let small_int = || {
        let leaf =
            prop_oneof![(-3i64..=3).prop_map(Expr::Int), prop::sample::select(vec!["x", "y"]).prop_map(Expr::var)];
        leaf.prop_recursive(2, 5, 2, |inner| {
            (prop::sample::select(vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::binary(op, a, b))
        })
    };
    let cond = move || {
        (prop::sample::select(vec![BinaryOp::Lt, BinaryOp::Le, BinaryOp::Eq, BinaryOp::Ne]), small_int(), small_int())
            .prop_map(|(op, a, b)| Expr::binary(op, a, b))
    };
    let var = || prop::sample::select(vec!["x", "y"]).prop_map(str::to_string);
    let leaf = prop_oneof![
        (var(), small_int()).prop_map(|(v, e)| Stmt::Assign(v, e)),
        (var(), prop::sample::select(vec![NondetKind::Int, NondetKind::UInt])).prop_map(|(v, k)| Stmt::Havoc(v, k)),
        cond().prop_map(Stmt::Assume),
        (cond(), 1u32..50).prop_map(|(c, l)| Stmt::Assert(c, Location::new(l, 1))),
        Just(Stmt::Return),
        Just(Stmt::Skip),
    ];
    leaf.prop_recursive(3, 10, 3, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Stmt::seq),
            (cond(), inner.clone(), inner).prop_map(|(c, t, f)| Stmt::IfElse(c, Box::new(t), Box::new(f))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printed_expressions_parse_back(e in bool_expr()) {
        let text = print_expr(&e);
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(print_expr(&back), text);
        // same value everywhere on a small grid
        for x in -2..=2 {
            for y in -2..=2 {
                let env: Env = [("x", x), ("y", y), ("n", 1)].iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
                prop_assert_eq!(eval_bool_bounded(&e, &env, -2, 2), eval_bool_bounded(&back, &env, -2, 2));
            }
        }
    }

    #[test]
    fn wp_is_exact_on_small_domains(s in stmt(), q in prop::sample::select(vec!["x <= y", "x + y == 1", "x * y >= 0", "x != 2"])) {
        let q = parse_expr(q).unwrap();
        let pre = wp(&s, &q);
        let cfg = ExecConfig { lo: -4, hi: 4, kinds: Default::default() };
        for x in -4..=4 {
            for y in -4..=4 {
                let env: Env = [("x", x), ("y", y)].iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
                let holds = eval_bool_bounded(&pre, &env, -4, 4).unwrap();
                let all_good = exec(&s, &env, &cfg).unwrap().into_iter().all(|o| match o {
                    Outcome::Normal(post) => eval_bool_bounded(&q, &post, -4, 4).unwrap(),
                    Outcome::Returned(_) | Outcome::Blocked => true,
                    Outcome::AssertFailed(..) => false,
                });
                prop_assert_eq!(holds, all_good, "x={} y={} wp={}", x, y, print_expr(&pre));
            }
        }
    }

    #[test]
    fn extraction_never_panics(s in any::<String>()) {
        let _ = extract_invariants(&s);
        let _ = extract_invariants(&format!("```\nloop invariant {s};\n```"));
    }

    #[test]
    fn parser_never_panics(s in any::<String>(), prefix in prop::sample::select(vec!["", "int main() { ", "int main() { while ("])) {
        let _ = parse_program(&format!("{prefix}{s}"));
        let _ = parse_expr(&s);
    }

    #[test]
    fn extraction_inverts_rendering(es in prop::collection::vec(bool_expr(), 1..6)) {
        let set = CandidateSet::from_exprs(es);
        let sources: Vec<&str> = set.sources();
        let back = extract_invariants(&render_block(&sources));
        // top-level conjunctions come back split, everything else verbatim
        for c in back.iter() {
            prop_assert!(c.is_parsed(), "{}", c.source);
        }
        let joined: Vec<Expr> = back.exprs().into_iter().cloned().collect();
        prop_assert!(joined.len() >= set.len());
    }

    #[test]
    fn enumeration_is_deterministic(seed in 0u64..1000, budget in 1usize..120) {
        let p = common::program("intro.c");
        let a = enumerate_candidates(&p, seed, budget);
        let b = enumerate_candidates(&p, seed, budget);
        prop_assert_eq!(a.keys(), b.keys());
        prop_assert!(a.len() <= budget);
    }
}

#[test]
fn corpus_programs_round_trip() {
    for name in ["intro.c", "listing4.c", "listing5.c", "example1.c", "example2.c"] {
        let p = common::program(name);
        let printed = pretty_print(&p);
        let back = parse_program(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert!(p.same_structure(&back), "{name}\n{printed}");
        assert_eq!(pretty_print(&back), printed, "{name}");
    }
}
