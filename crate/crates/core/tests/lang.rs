mod common;

use proptest::prelude::*;

use loopy_core::lang::{
    annotate, parse_annotated, parse_invariant, parse_program, print_expr, CandidateSet, ParseError, Stmt,
};

use common::program;

#[test]
fn intro_program_shape() {
    let p = program("intro.c");
    let facts: Vec<String> = p.pre_facts().unwrap().iter().map(print_expr).collect();
    assert_eq!(facts, ["n >= 0", "x == n", "y == 0"]);
    assert_eq!(print_expr(&p.guard), "x > 0");
    let post: Vec<String> = p.post().iter().map(|(e, _)| print_expr(e)).collect();
    assert_eq!(post, ["y == n"]);
}

#[test]
fn no_loop_is_unsupported() {
    let err = parse_program("int main(){ return 0; }").unwrap_err();
    assert!(matches!(err, ParseError::Unsupported { .. }), "{err}");
    assert!(err.to_string().contains("no loop"), "{err}");
}

#[test]
fn listing5_shape() {
    let p = program("listing5.c");
    let items = p.body.items();
    assert!(matches!(items[0], Stmt::Havoc(v, _) if v == "j"));
    assert!(items.iter().any(|s| matches!(s, Stmt::IfElse(_, t, _) if matches!(**t, Stmt::Return))));
    let post: Vec<String> = p.post().iter().map(|(e, _)| print_expr(e)).collect();
    assert_eq!(post, ["k <= 1000000"]);
}

#[test]
fn rejected_features_are_named() {
    for (src, feature) in [
        ("int main(){ int a[3]; while (1) {} }", "array"),
        ("int main(){ int *p; while (1) {} }", "pointer"),
        ("int main(){ int i = 0; while (i < 3) { while (i < 2) { i++; } i++; } return 0; }", "nested"),
        ("int f() { return 0; } int main(){ int i = 0; while (i < 3) { i++; } return 0; }", "function"),
    ] {
        let err = parse_program(src).unwrap_err();
        assert!(err.is_unsupported(), "{src}: {err}");
        assert!(err.to_string().contains(feature), "{src}: {err}");
    }
}

#[test]
fn syntax_errors_have_positions() {
    let err = parse_program("int main() {\n  int x = ;\n}").unwrap_err();
    let loc = err.location();
    assert_eq!(loc.line, 2);
}

#[test]
fn invariant_parsing() {
    assert_eq!(print_expr(parse_invariant("x + y == n").expr.as_ref().unwrap()), "x + y == n");
    assert_eq!(print_expr(parse_invariant("x >= 0 ==> y <= n").expr.as_ref().unwrap()), "x >= 0 ==> y <= n");
    let at = parse_invariant("\\at(x, Pre) == 0");
    assert!(at.expr.is_none());
    assert_eq!(at.source, "\\at(x, Pre) == 0");
}

#[test]
fn implication_is_right_associative() {
    let e = parse_invariant("x > 0 ==> y > 0 ==> n > 0").expr.unwrap();
    assert_eq!(print_expr(&e), "x > 0 ==> y > 0 ==> n > 0");
    assert_eq!(e, parse_invariant("x > 0 ==> (y > 0 ==> n > 0)").expr.unwrap());
    let f = parse_invariant("(x > 0 ==> y > 0) ==> n > 0").expr.unwrap();
    assert_ne!(e, f);
}

#[test]
fn annotation_layout() {
    let p = program("intro.c");
    let text = annotate(&p, &CandidateSet::from_sources(["x + y == n", "x >= 0"]));
    let a = text.find("loop invariant x + y == n;").unwrap();
    let b = text.find("loop invariant x >= 0;").unwrap();
    assert!(a < b);
    assert!(text.contains("/*@\n"));
    let empty = annotate(&p, &CandidateSet::new());
    assert!(empty.contains("/*@\n") && empty.contains("*/\n"));
}

fn pool() -> Vec<&'static str> {
    vec!["x + y == n", "x >= 0", "y <= n", "x ++ y", "n >= 0 ==> y >= 0", "x == 1 || y < 10", "\\at(x, Pre) == 0"]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// Annotating and parsing back gives the same program and candidate list.
    #[test]
    fn annotate_round_trip(picks in prop::collection::vec(0usize..7, 0..7), which in 0usize..5) {
        let name = ["intro.c", "listing4.c", "listing5.c", "example1.c", "example2.c"][which];
        let p = program(name);
        let srcs: Vec<&str> = picks.iter().map(|i| pool()[*i]).collect();
        let set = CandidateSet::from_sources(srcs.iter().copied());
        let text = annotate(&p, &set);
        let back = parse_annotated(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert!(back.program.same_structure(&p));
        prop_assert_eq!(back.candidates.sources(), set.sources());
        // annotating again replaces the block rather than adding one
        let again = annotate(&back.program, &set);
        prop_assert_eq!(again.matches("/*@").count(), 1);
    }
}
