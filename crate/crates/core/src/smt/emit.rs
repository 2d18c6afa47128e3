//! SMT-LIB 2.6 rendering of verification conditions.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::lang::eval::eval_int;
use crate::lang::{BinaryOp, Expr, IntKind, UnaryOp};
use crate::vcgen::VerificationCondition;

use super::Logic;

const TWO_32: &str = "4294967296";
const TWO_31: &str = "2147483648";

fn symbol(name: &str) -> String {
    format!("|{name}|")
}

fn literal(v: &num_bigint::BigInt) -> String {
    if v.sign() == num_bigint::Sign::Minus {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

fn is_nonzero_literal(e: &Expr) -> bool {
    e.is_constant() && !e.contains_forall() && eval_int(e, &Default::default()).map(|v| v != 0.into()).unwrap_or(false)
}

/// Render an expression as an SMT-LIB term. Integer subterms without
/// variables are folded to literals.
pub fn term(e: &Expr) -> String {
    let mut out = String::new();
    write_term(&mut out, e);
    out
}

fn write_term(out: &mut String, e: &Expr) {
    if !matches!(e, Expr::Int(_) | Expr::Bool(_)) && e.is_constant() && !e.contains_forall() {
        if let Ok(v) = eval_int(e, &Default::default()) {
            out.push_str(&literal(&v));
            return;
        }
    }
    match e {
        Expr::Int(v) => out.push_str(&literal(&(*v).into())),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(&symbol(v)),
        Expr::Nondet(_) => panic!("nondeterministic call reached SMT emission"),
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push_str("(- ");
            write_term(out, inner);
            out.push(')');
        }
        Expr::Unary(UnaryOp::Not, inner) => {
            out.push_str("(not ");
            write_term(out, inner);
            out.push(')');
        }
        Expr::Binary(op, a, b) => write_binary(out, *op, a, b),
        Expr::Ite(c, t, f) => {
            out.push_str("(ite ");
            write_term(out, c);
            out.push(' ');
            write_term(out, t);
            out.push(' ');
            write_term(out, f);
            out.push(')');
        }
        Expr::Wrap(IntKind::Unsigned, inner) => {
            out.push_str("(mod ");
            write_term(out, inner);
            let _ = write!(out, " {TWO_32})");
        }
        Expr::Wrap(IntKind::Signed, inner) => {
            out.push_str("(- (mod (+ ");
            write_term(out, inner);
            let _ = write!(out, " {TWO_31}) {TWO_32}) {TWO_31})");
        }
        Expr::Forall(vars, body) => {
            out.push_str("(forall (");
            for (i, v) in vars.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "({} Int)", symbol(v));
            }
            out.push_str(") ");
            write_term(out, body);
            out.push(')');
        }
    }
}

/// Flatten a chain of the same associative operator.
fn flatten<'a>(op: BinaryOp, e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Binary(o, a, b) if *o == op => {
            flatten(op, a, out);
            flatten(op, b, out);
        }
        other => out.push(other),
    }
}

fn write_binary(out: &mut String, op: BinaryOp, a: &Expr, b: &Expr) {
    use BinaryOp::*;
    let head = match op {
        Add => "+",
        Sub => "-",
        Mul => "*",
        Eq | Iff => "=",
        Lt => "<",
        Le => "<=",
        Gt => ">",
        Ge => ">=",
        And => "and",
        Or => "or",
        Implies => "=>",
        Ne => {
            out.push_str("(not (= ");
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push_str("))");
            return;
        }
        Div | Mod => {
            write_division(out, op, a, b);
            return;
        }
    };
    let mut args = Vec::new();
    if matches!(op, And | Or | Add | Mul) {
        flatten(op, a, &mut args);
        flatten(op, b, &mut args);
    } else {
        args.push(a);
        args.push(b);
    }
    let _ = write!(out, "({head}");
    for arg in args {
        out.push(' ');
        write_term(out, arg);
    }
    out.push(')');
}

/// C division and remainder: truncate toward zero, `x / 0 = 0`,
/// `x % 0 = x`. SMT-LIB `div`/`mod` agree with C when the dividend is
/// non-negative, whatever the divisor's sign.
fn write_division(out: &mut String, op: BinaryOp, a: &Expr, b: &Expr) {
    let ta = term(a);
    let tb = term(b);
    let smt_op = if op == BinaryOp::Div { "div" } else { "mod" };
    let truncated = format!("(ite (>= {ta} 0) ({smt_op} {ta} {tb}) (- ({smt_op} (- {ta}) {tb})))");
    if is_nonzero_literal(b) {
        out.push_str(&truncated);
    } else {
        let at_zero = if op == BinaryOp::Div { "0".to_string() } else { ta.clone() };
        let _ = write!(out, "(ite (= {tb} 0) {at_zero} {truncated})");
    }
}

fn collect_free(e: &Expr, out: &mut BTreeSet<String>) {
    out.extend(e.free_vars());
}

pub fn pick_logic(exprs: &[&Expr]) -> Logic {
    let nonlinear = exprs.iter().any(|e| e.is_nonlinear());
    let quantified = exprs.iter().any(|e| e.contains_forall());
    match (nonlinear, quantified) {
        (false, false) => Logic::QfLia,
        (true, false) => Logic::QfNia,
        (false, true) => Logic::Lia,
        (true, true) => Logic::Nia,
    }
}

/// A script asserting the hypotheses and the negated conclusion; `unsat`
/// means the VC is valid. Hypotheses are sorted and deduplicated so that
/// equivalent VCs render identically.
pub fn emit_smtlib(vc: &VerificationCondition) -> String {
    let vc = vc.prenex();
    let hyps: BTreeSet<String> = vc.hypotheses.iter().map(term).collect();
    let conclusion = term(&vc.conclusion);
    let mut all: Vec<&Expr> = vc.hypotheses.iter().collect();
    all.push(&vc.conclusion);
    let mut vars = BTreeSet::new();
    for e in &all {
        collect_free(e, &mut vars);
    }
    let logic = pick_logic(&all);

    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(out, "(set-logic {})", logic.name());
    for v in &vars {
        let _ = writeln!(out, "(declare-fun {} () Int)", symbol(v));
    }
    for h in &hyps {
        let _ = writeln!(out, "(assert {h})");
    }
    let _ = writeln!(out, "(assert (not {conclusion}))");
    out.push_str("(check-sat)\n(get-model)\n");
    out
}
