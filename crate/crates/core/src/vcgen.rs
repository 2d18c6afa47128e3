//! Weakest preconditions and verification conditions.
//!
//! A VC is `hypotheses ⇒ conclusion` with every free variable implicitly
//! universally quantified. Program expressions are first lowered: calls to
//! `unknown_int()` inside expressions become havocs of fresh temporaries and,
//! under [`IntSemantics::Wrap32`], arithmetic is wrapped to 32 bits following
//! the C conversion rules. Candidate invariants and assertions are always
//! read over mathematical integers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::eval::kind_range;
use crate::lang::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntSemantics {
    /// Mathematical integers; unsigned havocs are non-negative.
    #[default]
    Unbounded,
    /// 32-bit two's complement `int` and modular `unsigned int`.
    Wrap32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VcKind {
    /// Candidate id.
    Establishment(usize),
    /// Candidate id.
    Preservation(usize),
    /// Index into the post-loop assertions.
    Sufficiency(usize),
    BodyAssertion(Location),
    PreludeAssertion(Location),
}

impl VcKind {
    pub fn candidate(&self) -> Option<usize> {
        match self {
            VcKind::Establishment(id) | VcKind::Preservation(id) => Some(*id),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationCondition {
    pub kind: VcKind,
    pub hypotheses: Vec<Expr>,
    pub conclusion: Expr,
    /// Candidate ids assumed in the hypotheses.
    pub provenance: Vec<usize>,
}

impl VerificationCondition {
    pub fn formula(&self) -> Expr {
        Expr::implies(Expr::conjunction(self.hypotheses.iter().cloned()), self.conclusion.clone())
    }

    /// The same VC with quantifiers in positive position removed; their
    /// variables become free, which is equivalent for validity because all
    /// bound names are fresh.
    pub fn prenex(&self) -> VerificationCondition {
        VerificationCondition {
            kind: self.kind.clone(),
            hypotheses: self.hypotheses.iter().map(|h| strip_foralls(h, false)).collect(),
            conclusion: strip_foralls(&self.conclusion, true),
            provenance: self.provenance.clone(),
        }
    }
}

fn strip_foralls(e: &Expr, positive: bool) -> Expr {
    match e {
        Expr::Forall(_, body) if positive => strip_foralls(body, true),
        Expr::Binary(BinaryOp::And, l, r) => Expr::and(strip_foralls(l, positive), strip_foralls(r, positive)),
        Expr::Binary(BinaryOp::Implies, l, r) => Expr::implies(strip_foralls(l, !positive), strip_foralls(r, positive)),
        Expr::Unary(UnaryOp::Not, inner) => Expr::not(strip_foralls(inner, !positive)),
        other => other.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VcError {
    #[error("candidate {0} has no parsed expression")]
    MissingExpr(usize),
}

/// How `assert` statements are treated while computing wp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssertMode {
    /// `wp(assert e, Q) = e ∧ Q`.
    Check,
    /// Asserts become assumes; they are proved by their own VCs.
    AssumeAll,
    /// Only the assert at this location is checked.
    Only(Location),
}

/// Range constraint on a variable of the given kind, if any.
pub fn range_fact(name: &str, kind: IntKind, semantics: IntSemantics) -> Option<Expr> {
    match (semantics, kind) {
        (IntSemantics::Unbounded, IntKind::Signed) => None,
        (IntSemantics::Unbounded, IntKind::Unsigned) => Some(Expr::ge(Expr::var(name), Expr::int(0))),
        (IntSemantics::Wrap32, kind) => {
            let (lo, hi) = kind_range(kind);
            let lo = i64::try_from(lo).expect("32-bit bound");
            let hi = i64::try_from(hi).expect("32-bit bound");
            Some(Expr::and(Expr::le(Expr::int(lo), Expr::var(name)), Expr::le(Expr::var(name), Expr::int(hi))))
        }
    }
}

struct Fresh {
    next: usize,
}

impl Fresh {
    fn name(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}${}", self.next)
    }
}

fn wp_inner(stmt: &Stmt, post: Expr, mode: AssertMode, semantics: IntSemantics, fresh: &mut Fresh) -> Expr {
    match stmt {
        Stmt::Skip => post,
        Stmt::Return => Expr::tt(),
        Stmt::Assign(v, e) => post.substitute(v, e),
        Stmt::Havoc(v, kind) => {
            let name = fresh.name(v);
            let body = post.substitute(v, &Expr::var(name.clone()));
            let body = match range_fact(&name, kind.result_kind(), semantics) {
                Some(r) => Expr::implies(r, body),
                None => body,
            };
            Expr::Forall(vec![name], Box::new(body))
        }
        Stmt::Assume(e) => Expr::implies(e.clone(), post),
        Stmt::Assert(e, loc) => {
            let check = match mode {
                AssertMode::Check => true,
                AssertMode::AssumeAll => false,
                AssertMode::Only(l) => l == *loc,
            };
            if check {
                Expr::and(e.clone(), post)
            } else {
                Expr::implies(e.clone(), post)
            }
        }
        Stmt::Seq(items) => items.iter().rev().fold(post, |q, s| wp_inner(s, q, mode, semantics, fresh)),
        Stmt::IfElse(c, t, f) => {
            let wt = wp_inner(t, post.clone(), mode, semantics, fresh);
            let wf = wp_inner(f, post, mode, semantics, fresh);
            Expr::and(Expr::implies(c.clone(), wt), Expr::implies(Expr::not(c.clone()), wf))
        }
    }
}

/// Weakest precondition of a loop-free statement under unbounded
/// semantics, checking every assertion. Nondeterministic calls inside
/// expressions are lowered to havocs first.
pub fn wp(stmt: &Stmt, post: &Expr) -> Expr {
    let mut lower = Lowering::new(IntSemantics::Unbounded, BTreeMap::new());
    let stmt = lower.stmt(stmt);
    wp_with(&stmt, post, AssertMode::Check, IntSemantics::Unbounded)
}

/// Weakest precondition of an already lowered statement.
pub fn wp_with(stmt: &Stmt, post: &Expr, mode: AssertMode, semantics: IntSemantics) -> Expr {
    wp_inner(stmt, post.clone(), mode, semantics, &mut Fresh { next: 0 })
}

/// Rewrites program statements into the form wp works on.
struct Lowering {
    semantics: IntSemantics,
    kinds: BTreeMap<String, IntKind>,
    temps: usize,
    /// Fresh temporaries introduced for nondeterministic calls.
    introduced: Vec<(String, NondetKind)>,
}

impl Lowering {
    fn new(semantics: IntSemantics, kinds: BTreeMap<String, IntKind>) -> Self {
        Lowering { semantics, kinds, temps: 0, introduced: Vec::new() }
    }

    fn kind(&self, v: &str) -> IntKind {
        self.kinds.get(v).copied().unwrap_or(IntKind::Signed)
    }

    /// Replace nondeterministic calls by temporaries, returning the havocs
    /// that must run first.
    fn hoist_nondet(&mut self, e: &Expr, havocs: &mut Vec<Stmt>) -> Expr {
        match e {
            Expr::Nondet(kind) => {
                let name = format!("nd${}", self.temps);
                self.temps += 1;
                self.kinds.insert(name.clone(), kind.result_kind());
                self.introduced.push((name.clone(), *kind));
                havocs.push(Stmt::Havoc(name.clone(), *kind));
                Expr::Var(name)
            }
            Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(self.hoist_nondet(inner, havocs))),
            Expr::Binary(op, l, r) => {
                let l = self.hoist_nondet(l, havocs);
                Expr::Binary(*op, Box::new(l), Box::new(self.hoist_nondet(r, havocs)))
            }
            Expr::Ite(c, t, f) => {
                let c = self.hoist_nondet(c, havocs);
                let t = self.hoist_nondet(t, havocs);
                Expr::Ite(Box::new(c), Box::new(t), Box::new(self.hoist_nondet(f, havocs)))
            }
            other => other.clone(),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Stmt {
        let mut havocs = Vec::new();
        let lowered = match s {
            Stmt::Skip | Stmt::Return | Stmt::Havoc(..) => s.clone(),
            Stmt::Assign(v, e) => {
                let e = self.hoist_nondet(e, &mut havocs);
                let e = match self.semantics {
                    IntSemantics::Unbounded => e,
                    IntSemantics::Wrap32 => {
                        let target = self.kind(v);
                        let (e, k) = self.wrap_int(&e);
                        convert(e, k, target)
                    }
                };
                Stmt::Assign(v.clone(), e)
            }
            Stmt::Assume(e) => {
                let e = self.hoist_nondet(e, &mut havocs);
                Stmt::Assume(self.wrap_bool(&e))
            }
            // assertions are annotations: mathematical integers
            Stmt::Assert(e, loc) => Stmt::Assert(self.hoist_nondet(e, &mut havocs), *loc),
            Stmt::Seq(items) => Stmt::Seq(items.iter().map(|i| self.stmt(i)).collect()),
            Stmt::IfElse(c, t, f) => {
                let c = self.hoist_nondet(c, &mut havocs);
                let c = self.wrap_bool(&c);
                Stmt::IfElse(c, Box::new(self.stmt(t)), Box::new(self.stmt(f)))
            }
        };
        if havocs.is_empty() {
            lowered
        } else {
            havocs.push(lowered);
            Stmt::Seq(havocs)
        }
    }

    fn wrap_bool(&self, e: &Expr) -> Expr {
        if self.semantics == IntSemantics::Unbounded {
            return e.clone();
        }
        match e {
            Expr::Binary(op, l, r) if op.is_comparison() => {
                let (l, kl) = self.wrap_int(l);
                let (r, kr) = self.wrap_int(r);
                let k = common_kind(kl, kr);
                Expr::binary(*op, convert(l, kl, k), convert(r, kr, k))
            }
            Expr::Binary(op, l, r) => Expr::binary(*op, self.wrap_bool(l), self.wrap_bool(r)),
            Expr::Unary(UnaryOp::Not, inner) => Expr::not(self.wrap_bool(inner)),
            Expr::Ite(c, t, f) => {
                Expr::Ite(Box::new(self.wrap_bool(c)), Box::new(self.wrap_bool(t)), Box::new(self.wrap_bool(f)))
            }
            other => other.clone(),
        }
    }

    /// Lower an integer expression, returning it with its C type.
    fn wrap_int(&self, e: &Expr) -> (Expr, IntKind) {
        match e {
            Expr::Int(_) => (e.clone(), IntKind::Signed),
            Expr::Var(v) => (e.clone(), self.kind(v)),
            Expr::Unary(UnaryOp::Neg, inner) => {
                let (x, k) = self.wrap_int(inner);
                (mk_wrap(k, Expr::neg(x)), k)
            }
            Expr::Binary(op, l, r) if op.is_arithmetic() => {
                let (l, kl) = self.wrap_int(l);
                let (r, kr) = self.wrap_int(r);
                let k = common_kind(kl, kr);
                (mk_wrap(k, Expr::binary(*op, convert(l, kl, k), convert(r, kr, k))), k)
            }
            Expr::Ite(c, t, f) => {
                let (t, kt) = self.wrap_int(t);
                let (f, kf) = self.wrap_int(f);
                let k = common_kind(kt, kf);
                (Expr::Ite(Box::new(self.wrap_bool(c)), Box::new(convert(t, kt, k)), Box::new(convert(f, kf, k))), k)
            }
            other => (other.clone(), IntKind::Signed),
        }
    }
}

fn common_kind(a: IntKind, b: IntKind) -> IntKind {
    if a == IntKind::Unsigned || b == IntKind::Unsigned {
        IntKind::Unsigned
    } else {
        IntKind::Signed
    }
}

fn convert(e: Expr, from: IntKind, to: IntKind) -> Expr {
    if from == to {
        e
    } else {
        mk_wrap(to, e)
    }
}

fn mk_wrap(kind: IntKind, e: Expr) -> Expr {
    match &e {
        Expr::Int(v) => {
            let w = crate::lang::eval::wrap(kind, &(*v).into());
            Expr::Int(i64::try_from(w).expect("32-bit value"))
        }
        Expr::Wrap(k, _) if *k == kind => e,
        _ => Expr::Wrap(kind, Box::new(e)),
    }
}

/// A program prepared for VC generation.
#[derive(Clone, Debug)]
pub struct VcContext {
    pub semantics: IntSemantics,
    pub prelude: Stmt,
    pub body: Stmt,
    pub epilogue: Stmt,
    pub guard: Expr,
    /// Range facts for program variables and guard temporaries.
    pub ranges: Vec<Expr>,
    /// Kinds of the temporaries introduced for nondeterministic calls.
    pub temps: BTreeMap<String, IntKind>,
    post: Vec<(Expr, Location)>,
    body_asserts: Vec<Location>,
    prelude_asserts: Vec<Location>,
}

impl VcContext {
    pub fn new(program: &Program, semantics: IntSemantics) -> Self {
        let kinds = program.decls.iter().map(|d| (d.name.clone(), d.kind)).collect();
        let mut lower = Lowering::new(semantics, kinds);
        let prelude = lower.stmt(&program.prelude);
        let body = lower.stmt(&program.body);
        let epilogue = lower.stmt(&program.epilogue);
        let before = lower.introduced.len();
        let mut guard_havocs = Vec::new();
        let guard = lower.hoist_nondet(&program.guard, &mut guard_havocs);
        let guard = lower.wrap_bool(&guard);

        let mut ranges: Vec<Expr> = Vec::new();
        if semantics == IntSemantics::Wrap32 {
            ranges.extend(program.decls.iter().filter_map(|d| range_fact(&d.name, d.kind, semantics)));
        }
        // values the guard reads from nondeterministic calls
        for (name, kind) in &lower.introduced[before..] {
            ranges.extend(range_fact(name, kind.result_kind(), semantics));
        }
        let temps = lower.introduced.iter().map(|(name, kind)| (name.clone(), kind.result_kind())).collect();
        VcContext {
            semantics,
            temps,
            prelude,
            body,
            epilogue,
            guard,
            ranges,
            post: program.post(),
            body_asserts: program.body_assertions().into_iter().map(|(_, l)| l).collect(),
            prelude_asserts: program.prelude_assertions().into_iter().map(|(_, l)| l).collect(),
        }
    }

    pub fn post_count(&self) -> usize {
        self.post.len()
    }

    fn assumed(candidates: &CandidateSet) -> (Vec<Expr>, Vec<usize>) {
        candidates.iter().filter_map(|c| c.expr.as_ref().map(|e| (e.guarded(), c.id))).unzip()
    }

    fn target(c: &CandidateInvariant) -> Result<Expr, VcError> {
        c.expr.as_ref().map(Expr::guarded).ok_or(VcError::MissingExpr(c.id))
    }

    /// `pre ⇒ c`, where the precondition is whatever the prelude establishes.
    pub fn establishment(&self, c: &CandidateInvariant) -> Result<VerificationCondition, VcError> {
        let target = Self::target(c)?;
        Ok(VerificationCondition {
            kind: VcKind::Establishment(c.id),
            hypotheses: self.ranges.clone(),
            conclusion: wp_with(&self.prelude, &target, AssertMode::AssumeAll, self.semantics),
            provenance: Vec::new(),
        })
    }

    /// `(∧ all ∧ B) ⇒ wp(S, target)`. Unparsed members of `all` are left out.
    pub fn preservation(
        &self,
        all: &CandidateSet,
        target: &CandidateInvariant,
    ) -> Result<VerificationCondition, VcError> {
        let goal = Self::target(target)?;
        let (mut hypotheses, provenance) = Self::assumed(all);
        hypotheses.splice(0..0, self.ranges.iter().cloned());
        hypotheses.push(self.guard.clone());
        Ok(VerificationCondition {
            kind: VcKind::Preservation(target.id),
            hypotheses,
            conclusion: wp_with(&self.body, &goal, AssertMode::AssumeAll, self.semantics),
            provenance,
        })
    }

    /// One VC per assertion after the loop, `(∧ I ∧ ¬B) ⇒ post_k`, then one
    /// per assertion in the body, `(∧ I ∧ B) ⇒ wp(S, assert)`.
    pub fn sufficiency(&self, candidates: &CandidateSet) -> Vec<VerificationCondition> {
        let (inv, provenance) = Self::assumed(candidates);
        let mut out = Vec::new();
        for (k, (_, loc)) in self.post.iter().enumerate() {
            let mut hypotheses = self.ranges.clone();
            hypotheses.extend(inv.iter().cloned());
            hypotheses.push(Expr::not(self.guard.clone()));
            out.push(VerificationCondition {
                kind: VcKind::Sufficiency(k),
                hypotheses,
                conclusion: wp_with(&self.epilogue, &Expr::tt(), AssertMode::Only(*loc), self.semantics),
                provenance: provenance.clone(),
            });
        }
        for loc in &self.body_asserts {
            let mut hypotheses = self.ranges.clone();
            hypotheses.extend(inv.iter().cloned());
            hypotheses.push(self.guard.clone());
            out.push(VerificationCondition {
                kind: VcKind::BodyAssertion(*loc),
                hypotheses,
                conclusion: wp_with(&self.body, &Expr::tt(), AssertMode::Only(*loc), self.semantics),
                provenance: provenance.clone(),
            });
        }
        out
    }

    /// Assertions before the loop; these do not depend on candidates.
    pub fn prelude_assertions(&self) -> Vec<VerificationCondition> {
        self.prelude_asserts
            .iter()
            .map(|loc| VerificationCondition {
                kind: VcKind::PreludeAssertion(*loc),
                hypotheses: self.ranges.clone(),
                conclusion: wp_with(&self.prelude, &Expr::tt(), AssertMode::Only(*loc), self.semantics),
                provenance: Vec::new(),
            })
            .collect()
    }
}

pub fn establishment_vc(
    program: &Program,
    candidate: &CandidateInvariant,
    semantics: IntSemantics,
) -> Result<VerificationCondition, VcError> {
    VcContext::new(program, semantics).establishment(candidate)
}

pub fn preservation_vc(
    program: &Program,
    all: &CandidateSet,
    target: &CandidateInvariant,
    semantics: IntSemantics,
) -> Result<VerificationCondition, VcError> {
    VcContext::new(program, semantics).preservation(all, target)
}

pub fn sufficiency_vc(
    program: &Program,
    candidates: &CandidateSet,
    semantics: IntSemantics,
) -> Vec<VerificationCondition> {
    VcContext::new(program, semantics).sufficiency(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn assign_substitutes() {
        let s = Stmt::seq([
            Stmt::Assign("x".into(), Expr::sub(Expr::var("x"), Expr::int(1))),
            Stmt::Assign("y".into(), Expr::add(Expr::var("y"), Expr::int(1))),
        ]);
        assert_eq!(print_expr(&wp(&s, &e("x + y == n"))), "x - 1 + (y + 1) == n");
    }

    #[test]
    fn havoc_then_assume() {
        let s = Stmt::seq([Stmt::Havoc("j".into(), NondetKind::Int), Stmt::Assume(e("j >= 1"))]);
        assert_eq!(print_expr(&wp(&s, &e("j >= 1"))), "\\forall int j$1; j$1 >= 1 ==> j$1 >= 1");
    }

    #[test]
    fn if_splits_on_guard() {
        let s = Stmt::IfElse(e("y < 0"), Box::new(Stmt::Assign("flag".into(), Expr::int(1))), Box::new(Stmt::Skip));
        assert_eq!(print_expr(&wp(&s, &e("flag >= 0"))), "(y < 0 ==> 1 >= 0) && (!(y < 0) ==> flag >= 0)");
    }

    #[test]
    fn return_discharges() {
        assert_eq!(wp(&Stmt::Return, &e("x > 0")), Expr::tt());
    }

    #[test]
    fn wrap_lowering_folds_literals() {
        let mut l = Lowering::new(IntSemantics::Wrap32, BTreeMap::from([("u".to_string(), IntKind::Unsigned)]));
        let s = l.stmt(&Stmt::Assign("u".into(), Expr::int(-1)));
        assert_eq!(s, Stmt::Assign("u".into(), Expr::int(u32::MAX as i64)));
        let s = l.stmt(&Stmt::Assign("u".into(), Expr::sub(Expr::var("u"), Expr::int(1))));
        assert_eq!(
            print_expr(match &s {
                Stmt::Assign(_, e) => e,
                _ => unreachable!(),
            }),
            "wrap_u32(u - 1)"
        );
    }

    #[test]
    fn prenex_strips_positive_quantifiers_only() {
        let vc = VerificationCondition {
            kind: VcKind::Sufficiency(0),
            hypotheses: vec![Expr::Forall(vec!["a".into()], Box::new(e("a > 0")))],
            conclusion: Expr::Forall(vec!["b".into()], Box::new(e("b > 0"))),
            provenance: vec![],
        };
        let p = vc.prenex();
        assert!(p.hypotheses[0].contains_forall());
        assert!(!p.conclusion.contains_forall());
    }
}
