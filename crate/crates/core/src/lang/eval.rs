//! Concrete semantics: expression evaluation over arbitrary-precision
//! integers and a small-step executor for loop-free statements that
//! enumerates nondeterministic choices over a finite domain.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use super::ast::*;

pub type Env = BTreeMap<String, BigInt>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unset(String),
    #[error("nondeterministic call cannot be evaluated")]
    Nondet,
    #[error("quantifier without a finite domain")]
    Quantifier,
    #[error("ill-sorted expression")]
    Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
}

/// C division truncating toward zero; `x / 0` is 0.
pub fn c_div(a: &BigInt, b: &BigInt) -> BigInt {
    if b.is_zero() {
        BigInt::zero()
    } else {
        a / b
    }
}

/// C remainder with the sign of the dividend; `x % 0` is `x`.
pub fn c_rem(a: &BigInt, b: &BigInt) -> BigInt {
    if b.is_zero() {
        a.clone()
    } else {
        a % b
    }
}

pub fn wrap(kind: IntKind, v: &BigInt) -> BigInt {
    let modulus: BigInt = BigInt::one() << 32;
    match kind {
        IntKind::Unsigned => v.mod_floor(&modulus),
        IntKind::Signed => {
            let half: BigInt = BigInt::one() << 31;
            let shifted: BigInt = v + &half;
            shifted.mod_floor(&modulus) - half
        }
    }
}

/// Inclusive range of a 32-bit C integer kind.
pub fn kind_range(kind: IntKind) -> (BigInt, BigInt) {
    match kind {
        IntKind::Unsigned => (BigInt::zero(), (BigInt::one() << 32) - 1),
        IntKind::Signed => {
            let half: BigInt = BigInt::one() << 31;
            (-half.clone(), half - 1)
        }
    }
}

struct Evaluator<'a> {
    env: &'a Env,
    /// Domain for quantified variables.
    domain: Option<(i64, i64)>,
}

impl Evaluator<'_> {
    fn eval(&self, e: &Expr, bound: &mut Vec<(String, BigInt)>) -> Result<Value, EvalError> {
        Ok(match e {
            Expr::Int(v) => Value::Int(BigInt::from(*v)),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(name) => {
                if let Some((_, v)) = bound.iter().rev().find(|(n, _)| n == name) {
                    Value::Int(v.clone())
                } else {
                    Value::Int(self.env.get(name).cloned().ok_or_else(|| EvalError::Unset(name.clone()))?)
                }
            }
            Expr::Nondet(_) => return Err(EvalError::Nondet),
            Expr::Unary(UnaryOp::Neg, inner) => Value::Int(-self.int(inner, bound)?),
            Expr::Unary(UnaryOp::Not, inner) => Value::Bool(!self.bool(inner, bound)?),
            Expr::Binary(op, lhs, rhs) => {
                use BinaryOp::*;
                match op {
                    And => Value::Bool(self.bool(lhs, bound)? && self.bool(rhs, bound)?),
                    Or => Value::Bool(self.bool(lhs, bound)? || self.bool(rhs, bound)?),
                    Implies => Value::Bool(!self.bool(lhs, bound)? || self.bool(rhs, bound)?),
                    Iff => Value::Bool(self.bool(lhs, bound)? == self.bool(rhs, bound)?),
                    _ => {
                        let a = self.int(lhs, bound)?;
                        let b = self.int(rhs, bound)?;
                        match op {
                            Add => Value::Int(a + b),
                            Sub => Value::Int(a - b),
                            Mul => Value::Int(a * b),
                            Div => Value::Int(c_div(&a, &b)),
                            Mod => Value::Int(c_rem(&a, &b)),
                            Eq => Value::Bool(a == b),
                            Ne => Value::Bool(a != b),
                            Lt => Value::Bool(a < b),
                            Le => Value::Bool(a <= b),
                            Gt => Value::Bool(a > b),
                            Ge => Value::Bool(a >= b),
                            And | Or | Implies | Iff => unreachable!(),
                        }
                    }
                }
            }
            Expr::Ite(c, t, f) => {
                if self.bool(c, bound)? {
                    self.eval(t, bound)?
                } else {
                    self.eval(f, bound)?
                }
            }
            Expr::Wrap(kind, inner) => Value::Int(wrap(*kind, &self.int(inner, bound)?)),
            Expr::Forall(vars, body) => {
                let (lo, hi) = self.domain.ok_or(EvalError::Quantifier)?;
                Value::Bool(self.forall(vars, body, lo, hi, bound)?)
            }
        })
    }

    fn forall(
        &self,
        vars: &[String],
        body: &Expr,
        lo: i64,
        hi: i64,
        bound: &mut Vec<(String, BigInt)>,
    ) -> Result<bool, EvalError> {
        let Some((first, rest)) = vars.split_first() else {
            return self.bool(body, bound);
        };
        for v in lo..=hi {
            bound.push((first.clone(), BigInt::from(v)));
            let holds = self.forall(rest, body, lo, hi, bound);
            bound.pop();
            if !holds? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn int(&self, e: &Expr, bound: &mut Vec<(String, BigInt)>) -> Result<BigInt, EvalError> {
        match self.eval(e, bound)? {
            Value::Int(v) => Ok(v),
            Value::Bool(_) => Err(EvalError::Sort),
        }
    }

    fn bool(&self, e: &Expr, bound: &mut Vec<(String, BigInt)>) -> Result<bool, EvalError> {
        match self.eval(e, bound)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(EvalError::Sort),
        }
    }
}

pub fn eval(e: &Expr, env: &Env) -> Result<Value, EvalError> {
    Evaluator { env, domain: None }.eval(e, &mut Vec::new())
}

pub fn eval_int(e: &Expr, env: &Env) -> Result<BigInt, EvalError> {
    Evaluator { env, domain: None }.int(e, &mut Vec::new())
}

pub fn eval_bool(e: &Expr, env: &Env) -> Result<bool, EvalError> {
    Evaluator { env, domain: None }.bool(e, &mut Vec::new())
}

/// Like [`eval_bool`], with quantifiers ranging over `lo..=hi`.
pub fn eval_bool_bounded(e: &Expr, env: &Env, lo: i64, hi: i64) -> Result<bool, EvalError> {
    Evaluator { env, domain: Some((lo, hi)) }.bool(e, &mut Vec::new())
}

/// How one execution path of a loop-free statement ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Normal(Env),
    Returned(Env),
    /// An `assume` was false.
    Blocked,
    AssertFailed(Location, Env),
}

/// Finite choices for the executor: havocs and reads of variables with no
/// value take every value in the domain (restricted to `>= 0` for
/// unsigned).
#[derive(Clone, Debug)]
pub struct ExecConfig {
    pub lo: i64,
    pub hi: i64,
    pub kinds: BTreeMap<String, IntKind>,
}

impl ExecConfig {
    pub fn for_program(program: &Program, lo: i64, hi: i64) -> Self {
        ExecConfig { lo, hi, kinds: program.decls.iter().map(|d| (d.name.clone(), d.kind)).collect() }
    }

    pub fn values(&self, kind: IntKind) -> impl Iterator<Item = BigInt> {
        let lo = match kind {
            IntKind::Signed => self.lo,
            IntKind::Unsigned => self.lo.max(0),
        };
        (lo..=self.hi).map(BigInt::from)
    }

    fn kind_of(&self, name: &str) -> IntKind {
        self.kinds.get(name).copied().unwrap_or(IntKind::Signed)
    }

    /// Every completion of `env` giving values to the listed variables that
    /// have none yet.
    pub fn materialize(&self, env: &Env, vars: &[String]) -> Vec<Env> {
        let mut out = vec![env.clone()];
        for v in vars {
            if env.contains_key(v) {
                continue;
            }
            let kind = self.kind_of(v);
            out = out
                .into_iter()
                .flat_map(|e| {
                    self.values(kind).map(move |val| {
                        let mut e = e.clone();
                        e.insert(v.clone(), val);
                        e
                    })
                })
                .collect();
        }
        out
    }

    /// Replace nondeterministic calls in `e` by fresh variables and return
    /// every environment that gives all of its variables a value, paired
    /// with the rewritten expression. Fresh variables start with `$`.
    fn instances(&self, env: &Env, e: &Expr) -> Vec<(Env, Expr)> {
        let mut fresh = Vec::new();
        let rewritten = replace_nondet(e, &mut fresh);
        let mut cfg = self.clone();
        for (name, kind) in &fresh {
            cfg.kinds.insert(name.clone(), kind.result_kind());
        }
        cfg.materialize(env, &rewritten.free_vars()).into_iter().map(|en| (en, rewritten.clone())).collect()
    }
}

fn replace_nondet(e: &Expr, fresh: &mut Vec<(String, NondetKind)>) -> Expr {
    match e {
        Expr::Nondet(kind) => {
            let name = format!("$nd{}", fresh.len());
            fresh.push((name.clone(), *kind));
            Expr::Var(name)
        }
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(replace_nondet(inner, fresh))),
        Expr::Binary(op, l, r) => {
            let l = replace_nondet(l, fresh);
            Expr::Binary(*op, Box::new(l), Box::new(replace_nondet(r, fresh)))
        }
        Expr::Ite(c, t, f) => {
            let c = replace_nondet(c, fresh);
            let t = replace_nondet(t, fresh);
            Expr::Ite(Box::new(c), Box::new(t), Box::new(replace_nondet(f, fresh)))
        }
        Expr::Wrap(k, inner) => Expr::Wrap(*k, Box::new(replace_nondet(inner, fresh))),
        other => other.clone(),
    }
}

fn drop_fresh(mut env: Env) -> Env {
    env.retain(|k, _| !k.starts_with('$'));
    env
}

/// Evaluate a (possibly nondeterministic) condition on every completion of
/// `env`; each result carries the completed environment.
pub fn eval_condition(cfg: &ExecConfig, env: &Env, e: &Expr) -> Result<Vec<(Env, bool)>, EvalError> {
    cfg.instances(env, e)
        .into_iter()
        .map(|(en, ex)| {
            let b = eval_bool(&ex, &en)?;
            Ok((drop_fresh(en), b))
        })
        .collect()
}

/// All outcomes of running `stmt` from `env`.
pub fn exec(stmt: &Stmt, env: &Env, cfg: &ExecConfig) -> Result<Vec<Outcome>, EvalError> {
    Ok(match stmt {
        Stmt::Skip => vec![Outcome::Normal(env.clone())],
        Stmt::Return => vec![Outcome::Returned(env.clone())],
        Stmt::Assign(v, e) => {
            let mut out = Vec::new();
            for (en, ex) in cfg.instances(env, e) {
                let value = eval_int(&ex, &en)?;
                let mut en = drop_fresh(en);
                en.insert(v.clone(), value);
                out.push(Outcome::Normal(en));
            }
            out
        }
        Stmt::Havoc(v, kind) => cfg
            .values(kind.result_kind())
            .map(|val| {
                let mut en = env.clone();
                en.insert(v.clone(), val);
                Outcome::Normal(en)
            })
            .collect(),
        Stmt::Assume(e) => eval_condition(cfg, env, e)?
            .into_iter()
            .map(|(en, b)| if b { Outcome::Normal(en) } else { Outcome::Blocked })
            .collect(),
        Stmt::Assert(e, loc) => eval_condition(cfg, env, e)?
            .into_iter()
            .map(|(en, b)| if b { Outcome::Normal(en) } else { Outcome::AssertFailed(*loc, en) })
            .collect(),
        Stmt::IfElse(c, t, f) => {
            let mut out = Vec::new();
            for (en, b) in eval_condition(cfg, env, c)? {
                out.extend(exec(if b { t } else { f }, &en, cfg)?);
            }
            out
        }
        Stmt::Seq(items) => {
            let mut frontier = vec![Outcome::Normal(env.clone())];
            for item in items {
                let mut next = Vec::new();
                for o in frontier {
                    match o {
                        Outcome::Normal(en) => next.extend(exec(item, &en, cfg)?),
                        done => next.push(done),
                    }
                }
                frontier = next;
            }
            frontier
        }
    })
}
