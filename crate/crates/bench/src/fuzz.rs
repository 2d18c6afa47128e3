//! Synthetic SV-COMP style sources for exercising normalization. Each file
//! mixes harness declarations, line markers, comments in awkward places,
//! verifier intrinsics and error labels around a small loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HEADERS: &[&str] = &[
    "extern void abort(void);",
    "extern void __assert_fail(const char *, const char *, unsigned int, const char *) __attribute__ ((__nothrow__ , __leaf__)) __attribute__ ((__noreturn__));",
    "void reach_error() { __assert_fail(\"0\", \"x.c\", 3, \"reach_error\"); }",
    "extern int __VERIFIER_nondet_int(void);",
    "extern unsigned int __VERIFIER_nondet_uint(void);",
    "extern void __VERIFIER_assume(int cond);",
    "void __VERIFIER_assert(int cond) {\n  if (!(cond)) {\n    ERROR: {reach_error();abort();}\n  }\n  return;\n}",
    "void assume_abort_if_not(int cond) {\n  if(!cond) {abort();}\n}",
    "extern void __VERIFIER_error(void);",
];

const COMMENTS: &[&str] = &[
    "// a line comment",
    "/* block */",
    "/* multi\n   line\n   block */",
    "// while (1) for a trap",
    "/* for (;;) */",
    "// ERROR: reach_error();",
    "/* __VERIFIER_assert(0); */",
];

/// A reproducible synthetic benchmark.
pub fn sv_comp_like(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let comment = |rng: &mut ChaCha8Rng, out: &mut String| {
        if rng.gen_bool(0.4) {
            out.push_str(COMMENTS.choose(rng).unwrap());
            out.push('\n');
        }
    };
    if rng.gen_bool(0.5) {
        out.push_str("# 1 \"bench.c\"\n# 1 \"<built-in>\" 1\n#line 4\n");
    }
    let mut headers: Vec<&str> = HEADERS.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    headers.shuffle(&mut rng);
    for h in headers {
        out.push_str(h);
        out.push('\n');
        comment(&mut rng, &mut out);
    }
    if rng.gen_bool(0.3) {
        out.push_str("int g = 0;\n");
    }
    let ret = if rng.gen_bool(0.85) { "int" } else { "void" };
    out.push_str(&format!("{ret} main({})\n{{\n", if rng.gen_bool(0.5) { "" } else { "void" }));
    let nondet = ["__VERIFIER_nondet_int()", "__VERIFIER_nondet_uint()", "__VERIFIER_nondet_unsigned()"];
    out.push_str(&format!("  int n = {};{}\n", nondet.choose(&mut rng).unwrap(), trailing(&mut rng)));
    match rng.gen_range(0..3) {
        0 => out.push_str("  __VERIFIER_assume(n >= 0 && n < 1000);\n"),
        1 => out.push_str("  assume_abort_if_not(n >= 0);\n"),
        _ => {}
    }
    out.push_str("  int x = 0;\n  int y = 0;\n");
    comment(&mut rng, &mut out);
    match rng.gen_range(0..3) {
        0 => out.push_str("  while (x < n) {\n    x++;\n    y = y + 2;\n  }\n"),
        1 => out.push_str("  for (x = 0; x < n; x++) { y += 2; }\n"),
        _ => out.push_str("  do {\n    x = x + 1; y = y + 2; /* step */\n  } while (x < n);\n"),
    }
    comment(&mut rng, &mut out);
    match rng.gen_range(0..4) {
        0 => out.push_str("  __VERIFIER_assert(y == 2 * x);\n"),
        1 => out.push_str("  __VERIFIER_assert(\n      y ==\n      2 * x); x = 0;\n"),
        2 => out.push_str("  if (!(y == 2 * x)) {\n  ERROR: reach_error();\n  }\n"),
        _ => out.push_str("  if (y != 2 * x) { reach_error(); }\n"),
    }
    if rng.gen_bool(0.2) {
        out.push_str("  if (y < 0) { ERROR: goto ERROR; }\n");
    }
    if ret == "int" && rng.gen_bool(0.5) {
        out.push_str("  return 0;\n");
    }
    out.push_str("}\n");
    if rng.gen_bool(0.3) {
        out.push_str("\n\n   \n");
    }
    if rng.gen_bool(0.2) {
        out = out.replace('\n', "\r\n");
    }
    out
}

fn trailing(rng: &mut ChaCha8Rng) -> &'static str {
    [" // pick", "", "   ", " /* c */"].choose(rng).unwrap()
}
