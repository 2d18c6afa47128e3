//! Printing of expressions and programs back to mini-language source. The
//! output re-parses to the same structure.

use std::fmt::Write;

use super::ast::*;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Forall(..) => 0,
        Expr::Binary(op, ..) => match op {
            BinaryOp::Iff => 1,
            BinaryOp::Implies => 2,
            BinaryOp::Or => 4,
            BinaryOp::And => 5,
            op if op.is_comparison() => 6,
            BinaryOp::Add | BinaryOp::Sub => 7,
            _ => 8,
        },
        Expr::Ite(..) => 3,
        Expr::Unary(..) => 9,
        _ => 10,
    }
}

/// Canonical text of an expression: single spaces around binary operators and
/// only the parentheses the grammar needs.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let p = precedence(e);
    if p < min {
        out.push('(');
        write_expr(out, e, 0);
        out.push(')');
        return;
    }
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(true) => out.push_str("\\true"),
        Expr::Bool(false) => out.push_str("\\false"),
        Expr::Var(name) => out.push_str(name),
        Expr::Nondet(kind) => {
            out.push_str(kind.intrinsic());
            out.push_str("()");
        }
        Expr::Unary(op, inner) => {
            let mut operand = String::new();
            write_expr(&mut operand, inner, 9);
            out.push_str(match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            });
            // `-5` would re-parse as a literal and `--x` as a decrement
            let needs_parens = *op == UnaryOp::Neg && (matches!(**inner, Expr::Int(_)) || operand.starts_with('-'));
            if needs_parens {
                let _ = write!(out, "({operand})");
            } else {
                out.push_str(&operand);
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let (lmin, rmin) = match op {
                BinaryOp::Implies => (p + 1, p),
                op if op.is_comparison() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_expr(out, lhs, lmin);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, rmin);
        }
        Expr::Ite(c, t, f) => {
            write_expr(out, c, 4);
            out.push_str(" ? ");
            write_expr(out, t, 0);
            out.push_str(" : ");
            write_expr(out, f, 3);
        }
        Expr::Wrap(kind, inner) => {
            out.push_str(match kind {
                IntKind::Signed => "wrap_i32(",
                IntKind::Unsigned => "wrap_u32(",
            });
            write_expr(out, inner, 0);
            out.push(')');
        }
        Expr::Forall(vars, body) => {
            let _ = write!(out, "\\forall int {}; ", vars.join(", "));
            write_expr(out, body, 0);
        }
    }
}

struct ProgramPrinter<'a> {
    decls: &'a [Decl],
    returns: ReturnType,
    out: String,
}

impl ProgramPrinter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn decls(&mut self, depth: usize, scope: Scope) {
        for d in self.decls.iter().filter(|d| d.scope == scope) {
            let ty = match d.kind {
                IntKind::Signed => "int",
                IntKind::Unsigned => "unsigned int",
            };
            self.line(depth, &format!("{ty} {};", d.name));
        }
    }

    fn stmt(&mut self, depth: usize, s: &Stmt) {
        match s {
            Stmt::Skip => {}
            Stmt::Assign(v, e) => self.line(depth, &format!("{v} = {};", print_expr(e))),
            Stmt::Havoc(v, kind) => self.line(depth, &format!("{v} = {}();", kind.intrinsic())),
            Stmt::Assume(e) => self.line(depth, &format!("assume({});", print_expr(e))),
            Stmt::Assert(e, _) => {
                if e.contains_nondet() {
                    self.line(depth, &format!("assert({});", print_expr(e)));
                } else {
                    self.line(depth, &format!("//@ assert {};", print_expr(e)));
                }
            }
            Stmt::Seq(items) => {
                for item in items {
                    self.stmt(depth, item);
                }
            }
            Stmt::IfElse(c, t, f) => {
                self.line(depth, &format!("if ({}) {{", print_expr(c)));
                self.stmt(depth + 1, t);
                if **f == Stmt::Skip {
                    self.line(depth, "}");
                } else {
                    self.line(depth, "} else {");
                    self.stmt(depth + 1, f);
                    self.line(depth, "}");
                }
            }
            Stmt::Return => match self.returns {
                ReturnType::Int => self.line(depth, "return 0;"),
                ReturnType::Void => self.line(depth, "return;"),
            },
        }
    }
}

/// Print a program as mini-language source with a `while` loop. For-loops
/// come out desugared.
pub fn pretty_print(program: &Program) -> String {
    let mut p = ProgramPrinter { decls: &program.decls, returns: program.returns, out: String::new() };
    let ret = match program.returns {
        ReturnType::Int => "int",
        ReturnType::Void => "void",
    };
    p.line(0, &format!("{ret} {}()", program.name));
    p.line(0, "{");
    p.decls(1, Scope::Prelude);
    p.stmt(1, &program.prelude);
    p.line(1, &format!("while ({}) {{", print_expr(&program.guard)));
    p.decls(2, Scope::Body);
    p.stmt(2, &program.body);
    p.line(1, "}");
    p.decls(1, Scope::Epilogue);
    p.stmt(1, &program.epilogue);
    p.line(0, "}");
    p.out
}

/// Print a loop-free statement, one simple statement per line.
pub fn print_stmt(stmt: &Stmt, returns: ReturnType) -> String {
    let mut p = ProgramPrinter { decls: &[], returns, out: String::new() };
    p.stmt(0, stmt);
    p.out
}
