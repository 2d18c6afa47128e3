use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Declared C integer kind of a program variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntKind {
    Signed,
    Unsigned,
}

/// Which intrinsic produced a nondeterministic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NondetKind {
    /// `unknown_int()`
    Int,
    /// `unknown_uint()`
    UInt,
}

impl NondetKind {
    pub fn intrinsic(self) -> &'static str {
        match self {
            NondetKind::Int => "unknown_int",
            NondetKind::UInt => "unknown_uint",
        }
    }

    pub fn result_kind(self) -> IntKind {
        match self {
            NondetKind::Int => IntKind::Signed,
            NondetKind::UInt => IntKind::Unsigned,
        }
    }
}

/// 1-based line/column position in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub fn new(line: u32, column: u32) -> Self {
        Location { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    /// C division, truncating toward zero.
    Div,
    /// C remainder, sign follows the dividend.
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
}

impl BinaryOp {
    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or | BinaryOp::Implies | BinaryOp::Iff)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::Implies => "==>",
            BinaryOp::Iff => "<==>",
        }
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn negated_comparison(self) -> Option<BinaryOp> {
        Some(match self {
            BinaryOp::Eq => BinaryOp::Ne,
            BinaryOp::Ne => BinaryOp::Eq,
            BinaryOp::Lt => BinaryOp::Ge,
            BinaryOp::Le => BinaryOp::Gt,
            BinaryOp::Gt => BinaryOp::Le,
            BinaryOp::Ge => BinaryOp::Lt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Int,
    Bool,
}

/// Integer and boolean terms share one tree; the parser guarantees every
/// node is well-sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    /// A call to `unknown_int()` / `unknown_uint()` inside an expression.
    Nondet(NondetKind),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Reduce an integer into the 32-bit range of the given kind. Only
    /// produced by the wraparound lowering, never by the parser.
    Wrap(IntKind, Box<Expr>),
    /// Universal quantification over integers. Only produced by wp.
    Forall(Vec<String>, Box<Expr>),
}

impl Expr {
    pub fn int(value: i64) -> Expr {
        Expr::Int(value)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn tt() -> Expr {
        Expr::Bool(true)
    }

    pub fn ff() -> Expr {
        Expr::Bool(false)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Not, Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(e))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::And, lhs, rhs)
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Or, lhs, rhs)
    }

    pub fn implies(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Implies, lhs, rhs)
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Eq, lhs, rhs)
    }

    pub fn ge(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Ge, lhs, rhs)
    }

    pub fn le(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Le, lhs, rhs)
    }

    pub fn lt(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Lt, lhs, rhs)
    }

    pub fn gt(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Gt, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, lhs, rhs)
    }

    /// Conjunction of all items; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Expr::tt(),
            Some(first) => iter.fold(first, Expr::and),
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Nondet(_) | Expr::Wrap(..) => Sort::Int,
            Expr::Bool(_) | Expr::Forall(..) => Sort::Bool,
            Expr::Unary(UnaryOp::Neg, _) => Sort::Int,
            Expr::Unary(UnaryOp::Not, _) => Sort::Bool,
            Expr::Binary(op, ..) => {
                if op.is_arithmetic() {
                    Sort::Int
                } else {
                    Sort::Bool
                }
            }
            Expr::Ite(_, then, _) => then.sort(),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Expr::Var(name) => {
                if !bound.contains(name) && !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Nondet(_) => {}
            Expr::Unary(_, e) | Expr::Wrap(_, e) => e.collect_free(bound, out),
            Expr::Binary(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Ite(c, a, b) => {
                c.collect_free(bound, out);
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Forall(vars, body) => {
                let depth = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.free_vars().iter().any(|v| v == name)
    }

    pub fn contains_nondet(&self) -> bool {
        self.any_node(&|e| matches!(e, Expr::Nondet(_)))
    }

    pub fn contains_forall(&self) -> bool {
        self.any_node(&|e| matches!(e, Expr::Forall(..)))
    }

    /// True if any node satisfies `pred` (pre-order).
    pub fn any_node(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Nondet(_) => false,
            Expr::Unary(_, e) | Expr::Wrap(_, e) | Expr::Forall(_, e) => e.any_node(pred),
            Expr::Binary(_, a, b) => a.any_node(pred) || b.any_node(pred),
            Expr::Ite(c, a, b) => c.any_node(pred) || a.any_node(pred) || b.any_node(pred),
        }
    }

    /// Number of nodes; used as the syntactic size when ranking candidates.
    pub fn size(&self) -> usize {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Nondet(_) => 1,
            Expr::Unary(_, e) | Expr::Wrap(_, e) | Expr::Forall(_, e) => 1 + e.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
            Expr::Ite(c, a, b) => 1 + c.size() + a.size() + b.size(),
        }
    }

    /// Integer literals appearing in the expression.
    pub fn literals(&self, out: &mut BTreeSet<i64>) {
        match self {
            Expr::Int(v) => {
                out.insert(*v);
            }
            Expr::Bool(_) | Expr::Var(_) | Expr::Nondet(_) => {}
            Expr::Unary(_, e) | Expr::Wrap(_, e) | Expr::Forall(_, e) => e.literals(out),
            Expr::Binary(_, a, b) => {
                a.literals(out);
                b.literals(out);
            }
            Expr::Ite(c, a, b) => {
                c.literals(out);
                a.literals(out);
                b.literals(out);
            }
        }
    }

    /// Capture-avoiding substitution of `replacement` for free occurrences of
    /// `name`. Quantifier binders are always fresh names, so capture can only
    /// happen when a binder shadows `name`, in which case substitution stops.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => replacement.clone(),
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Nondet(_) => self.clone(),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(name, replacement))),
            Expr::Wrap(kind, e) => Expr::Wrap(*kind, Box::new(e.substitute(name, replacement))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.substitute(name, replacement)), Box::new(b.substitute(name, replacement)))
            }
            Expr::Ite(c, a, b) => Expr::Ite(
                Box::new(c.substitute(name, replacement)),
                Box::new(a.substitute(name, replacement)),
                Box::new(b.substitute(name, replacement)),
            ),
            Expr::Forall(vars, body) => {
                if vars.iter().any(|v| v == name) {
                    self.clone()
                } else {
                    Expr::Forall(vars.clone(), Box::new(body.substitute(name, replacement)))
                }
            }
        }
    }

    /// Split a top-level conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary(BinaryOp::And, a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Divisors in `/` and `%` nodes that are not nonzero literals.
    pub fn unguarded_divisors(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.collect_divisors(&mut out);
        out
    }

    fn collect_divisors(&self, out: &mut Vec<Expr>) {
        match self {
            Expr::Binary(BinaryOp::Div | BinaryOp::Mod, a, b) => {
                a.collect_divisors(out);
                b.collect_divisors(out);
                let literal_nonzero = matches!(**b, Expr::Int(v) if v != 0);
                if !literal_nonzero && !out.contains(b) {
                    out.push((**b).clone());
                }
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Nondet(_) => {}
            Expr::Unary(_, e) | Expr::Wrap(_, e) | Expr::Forall(_, e) => e.collect_divisors(out),
            Expr::Binary(_, a, b) => {
                a.collect_divisors(out);
                b.collect_divisors(out);
            }
            Expr::Ite(c, a, b) => {
                c.collect_divisors(out);
                a.collect_divisors(out);
                b.collect_divisors(out);
            }
        }
    }

    /// `defined(e) ==> e`, where `defined` asserts every non-literal divisor
    /// is nonzero. Expressions without such divisors are returned unchanged.
    pub fn guarded(&self) -> Expr {
        let divisors = self.unguarded_divisors();
        if divisors.is_empty() {
            return self.clone();
        }
        let defined = Expr::conjunction(divisors.into_iter().map(|d| Expr::binary(BinaryOp::Ne, d, Expr::Int(0))));
        Expr::implies(defined, self.clone())
    }

    /// True when the expression multiplies two non-constant terms or divides
    /// by a non-constant term.
    pub fn is_nonlinear(&self) -> bool {
        self.any_node(&|e| match e {
            Expr::Binary(BinaryOp::Mul, a, b) => !a.is_constant() && !b.is_constant(),
            Expr::Binary(BinaryOp::Div | BinaryOp::Mod, _, b) => !b.is_constant(),
            _ => false,
        })
    }

    /// No variables and no nondeterminism.
    pub fn is_constant(&self) -> bool {
        !self.any_node(&|e| matches!(e, Expr::Var(_) | Expr::Nondet(_)))
    }
}

/// Loop-free statements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Assign(String, Expr),
    /// `v = unknown_int();` / `v = unknown_uint();`
    Havoc(String, NondetKind),
    Assume(Expr),
    Assert(Expr, Location),
    Seq(Vec<Stmt>),
    IfElse(Expr, Box<Stmt>, Box<Stmt>),
    Return,
}

impl Stmt {
    /// Build a sequence, flattening nested sequences and dropping skips.
    pub fn seq(items: impl IntoIterator<Item = Stmt>) -> Stmt {
        let mut flat = Vec::new();
        for item in items {
            match item {
                Stmt::Skip => {}
                Stmt::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Stmt::Skip,
            1 => flat.pop().unwrap_or(Stmt::Skip),
            _ => Stmt::Seq(flat),
        }
    }

    pub fn items(&self) -> Vec<&Stmt> {
        match self {
            Stmt::Skip => Vec::new(),
            Stmt::Seq(items) => items.iter().collect(),
            other => vec![other],
        }
    }

    /// Assertions in program order.
    pub fn assertions(&self) -> Vec<(&Expr, Location)> {
        let mut out = Vec::new();
        self.collect_assertions(&mut out);
        out
    }

    fn collect_assertions<'a>(&'a self, out: &mut Vec<(&'a Expr, Location)>) {
        match self {
            Stmt::Assert(e, loc) => out.push((e, *loc)),
            Stmt::Seq(items) => items.iter().for_each(|s| s.collect_assertions(out)),
            Stmt::IfElse(_, a, b) => {
                a.collect_assertions(out);
                b.collect_assertions(out);
            }
            _ => {}
        }
    }

    /// Expressions appearing anywhere in the statement.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_exprs(&mut out);
        out
    }

    fn collect_exprs<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Stmt::Assign(_, e) | Stmt::Assume(e) | Stmt::Assert(e, _) => out.push(e),
            Stmt::Seq(items) => items.iter().for_each(|s| s.collect_exprs(out)),
            Stmt::IfElse(c, a, b) => {
                out.push(c);
                a.collect_exprs(out);
                b.collect_exprs(out);
            }
            Stmt::Skip | Stmt::Havoc(..) | Stmt::Return => {}
        }
    }

    /// Same statement with every assertion location reset; used for
    /// structural comparison.
    pub fn without_locations(&self) -> Stmt {
        match self {
            Stmt::Assert(e, _) => Stmt::Assert(e.clone(), Location::default()),
            Stmt::Seq(items) => Stmt::Seq(items.iter().map(Stmt::without_locations).collect()),
            Stmt::IfElse(c, a, b) => {
                Stmt::IfElse(c.clone(), Box::new(a.without_locations()), Box::new(b.without_locations()))
            }
            other => other.clone(),
        }
    }
}

/// Where a variable was declared relative to the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Prelude,
    Body,
    Epilogue,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decl {
    pub name: String,
    pub kind: IntKind,
    pub scope: Scope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReturnType {
    Int,
    Void,
}

/// A single-loop program: `prelude; while (guard) body; epilogue`.
///
/// The prelude and epilogue are loop-free; the Hoare precondition is whatever
/// the prelude establishes and the postcondition is the set of assertions in
/// the epilogue.
#[derive(Clone, Debug)]
pub struct Program {
    pub name: String,
    pub returns: ReturnType,
    pub decls: Vec<Decl>,
    pub prelude: Stmt,
    pub guard: Expr,
    pub body: Stmt,
    pub epilogue: Stmt,
    pub loop_location: Location,
    pub source_text: String,
    /// Byte offset of the first line of the loop (or of the annotation block
    /// attached to it) in `source_text`, and the byte range of that block.
    pub(crate) loop_line_offset: usize,
    pub(crate) annotation_span: Option<(usize, usize)>,
}

impl Program {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<IntKind> {
        self.decl(name).map(|d| d.kind)
    }

    /// Variables a loop invariant may mention.
    pub fn loop_head_vars(&self) -> Vec<&Decl> {
        self.decls.iter().filter(|d| d.scope == Scope::Prelude).collect()
    }

    /// Assertions after the loop, in order.
    pub fn post(&self) -> Vec<(Expr, Location)> {
        self.epilogue.assertions().into_iter().map(|(e, l)| (e.clone(), l)).collect()
    }

    pub fn body_assertions(&self) -> Vec<(Expr, Location)> {
        self.body.assertions().into_iter().map(|(e, l)| (e.clone(), l)).collect()
    }

    pub fn prelude_assertions(&self) -> Vec<(Expr, Location)> {
        self.prelude.assertions().into_iter().map(|(e, l)| (e.clone(), l)).collect()
    }

    /// The precondition as a list of facts when the prelude is straight-line
    /// code assigning each variable at most once from values that are not
    /// changed afterwards. Returns `None` for preludes with branches or
    /// reassignments, whose effect is only available through wp.
    pub fn pre_facts(&self) -> Option<Vec<Expr>> {
        let mut facts: Vec<Expr> = Vec::new();
        let mut assigned: Vec<&str> = Vec::new();
        // a write to a variable that an earlier fact reads invalidates it
        let clobbers = |facts: &[Expr], v: &str| facts.iter().any(|f| f.mentions(v));
        for stmt in self.prelude.items() {
            match stmt {
                Stmt::Assign(v, e) => {
                    if assigned.contains(&v.as_str()) || e.contains_nondet() || e.mentions(v) || clobbers(&facts, v) {
                        return None;
                    }
                    assigned.push(v);
                    facts.push(Expr::eq(Expr::var(v.clone()), e.clone()));
                }
                Stmt::Havoc(v, kind) => {
                    if assigned.contains(&v.as_str()) || clobbers(&facts, v) {
                        return None;
                    }
                    assigned.push(v);
                    if *kind == NondetKind::UInt {
                        facts.push(Expr::ge(Expr::var(v.clone()), Expr::Int(0)));
                    }
                }
                Stmt::Assume(e) => {
                    if e.contains_nondet() {
                        return None;
                    }
                    facts.push(e.clone());
                }
                Stmt::Assert(..) | Stmt::Skip => {}
                _ => return None,
            }
        }
        Some(facts)
    }

    /// Structural equality ignoring source text and assertion locations.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.name == other.name
            && self.returns == other.returns
            && self.decls == other.decls
            && self.prelude.without_locations() == other.prelude.without_locations()
            && self.guard == other.guard
            && self.body.without_locations() == other.body.without_locations()
            && self.epilogue.without_locations() == other.epilogue.without_locations()
    }

    /// Stable fingerprint of the program structure.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let printed = crate::lang::printer::pretty_print(self);
        let digest = Sha256::digest(printed.as_bytes());
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }
}
