//! Offline candidate enumeration from a fixed grammar over the variables in
//! scope at the loop head and the literals of the program.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lang::{BinaryOp, CandidateSet, Expr, Program};

const OPS: [BinaryOp; 5] = [BinaryOp::Eq, BinaryOp::Le, BinaryOp::Ge, BinaryOp::Lt, BinaryOp::Gt];

/// Constants worth comparing against: program literals, 0, and each
/// literal's neighbours.
pub fn harvest_constants(program: &Program) -> Vec<i64> {
    let mut lits = BTreeSet::new();
    for e in program.prelude.expressions() {
        e.literals(&mut lits);
    }
    program.guard.literals(&mut lits);
    for e in program.body.expressions().into_iter().chain(program.epilogue.expressions()) {
        e.literals(&mut lits);
    }
    let mut out: BTreeSet<i64> = BTreeSet::from([0]);
    for l in lits {
        out.insert(l);
        out.insert(l.saturating_sub(1));
        out.insert(l.saturating_add(1));
    }
    let mut v: Vec<i64> = out.into_iter().collect();
    v.sort_by_key(|c| (c.unsigned_abs(), *c < 0));
    v
}

fn compare_all(lhs: &Expr, rhs: &Expr, out: &mut Vec<Expr>) {
    for op in OPS {
        out.push(Expr::binary(op, lhs.clone(), rhs.clone()));
    }
}

/// Candidate groups in rank order. Within a group the order is fixed, so a
/// stable sort by size keeps the grammar's own preference on ties.
fn grammar(program: &Program) -> Vec<Vec<Expr>> {
    let vars: Vec<Expr> = program.loop_head_vars().iter().map(|d| Expr::var(d.name.clone())).collect();
    let consts: Vec<Expr> = harvest_constants(program).into_iter().map(Expr::int).collect();
    let in_scope: BTreeSet<String> = program.loop_head_vars().iter().map(|d| d.name.clone()).collect();
    let usable = |e: &Expr| !e.contains_nondet() && e.free_vars().iter().all(|v| in_scope.contains(v));

    let mut var_const = Vec::new();
    for v in &vars {
        for c in &consts {
            compare_all(v, c, &mut var_const);
        }
    }

    // later declarations on the left: `y <= n` rather than `n >= y`
    let mut var_var = Vec::new();
    for (i, a) in vars.iter().enumerate() {
        for b in &vars[i + 1..] {
            compare_all(b, a, &mut var_var);
        }
    }

    // guard and assertion pieces, and implications between them
    let mut pieces: Vec<Expr> = Vec::new();
    let mut guards: Vec<Expr> = Vec::new();
    for g in std::iter::once(&program.guard).chain(program.guard.conjuncts()) {
        if usable(g) && !guards.contains(g) {
            guards.push(g.clone());
        }
    }
    let mut posts: Vec<Expr> = Vec::new();
    for (p, _) in program.post().into_iter().chain(program.body_assertions()) {
        for q in std::iter::once(&p).chain(p.conjuncts()) {
            if usable(q) && !posts.contains(q) {
                posts.push(q.clone());
            }
        }
    }
    pieces.extend(guards.iter().cloned());
    pieces.extend(posts.iter().cloned());
    let mut implications = Vec::new();
    for g in &guards {
        for p in &posts {
            implications.push(Expr::implies(Expr::not(g.clone()), p.clone()));
            implications.push(Expr::implies(g.clone(), p.clone()));
        }
    }

    let mut terms = Vec::new();
    for (i, a) in vars.iter().enumerate() {
        for b in &vars[i + 1..] {
            terms.push((Expr::add(a.clone(), b.clone()), [a, b]));
            terms.push((Expr::sub(a.clone(), b.clone()), [a, b]));
            terms.push((Expr::sub(b.clone(), a.clone()), [a, b]));
        }
    }
    let mut term_var = Vec::new();
    let mut term_const = Vec::new();
    for (t, used) in &terms {
        for v in &vars {
            if !used.contains(&v) {
                compare_all(t, v, &mut term_var);
            }
        }
        for c in &consts {
            compare_all(t, c, &mut term_const);
        }
    }

    vec![var_const, var_var, pieces, term_var, term_const, implications]
}

/// Up to `budget` distinct candidates, smallest first. The seed permutes
/// candidates of equal size within a group.
pub fn enumerate_candidates(program: &Program, seed: u64, budget: usize) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranked: Vec<(usize, usize, Expr)> = Vec::new();
    for (g, mut group) in grammar(program).into_iter().enumerate() {
        if seed != 0 {
            group.shuffle(&mut rng);
        }
        ranked.extend(group.into_iter().map(|e| (e.size(), g, e)));
    }
    ranked.sort_by_key(|(size, g, _)| (*size, *g));

    let mut out = CandidateSet::new();
    for (_, _, e) in ranked {
        if out.len() >= budget {
            break;
        }
        if e.is_constant() {
            continue;
        }
        out.insert(crate::lang::CandidateInvariant::from_expr(0, e));
    }
    out
}
