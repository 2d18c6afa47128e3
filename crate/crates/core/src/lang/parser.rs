use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{CandidateInvariant, CandidateSet, ParseError};

/// Where an expression comes from; annotations get ACSL conveniences and may
/// not call the nondeterminism intrinsics.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ExprContext {
    Code,
    Annotation,
}

/// A parsed program together with the loop annotation block attached to its
/// loop, if any.
#[derive(Clone, Debug)]
pub struct AnnotatedProgram {
    pub program: Program,
    pub candidates: CandidateSet,
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    decls: Vec<Decl>,
    scope: Scope,
    /// When false, identifiers are not checked against declarations.
    check_decls: bool,
}

enum Item {
    Stmt(Stmt),
    Loop(LoopParts),
}

struct LoopParts {
    guard: Expr,
    body: Stmt,
    /// Statements to append to the prelude (from a `for` initializer).
    init: Stmt,
    location: Location,
    keyword_offset: usize,
    annotation: Option<LoopAnnotation>,
}

struct LoopAnnotation {
    start_offset: usize,
    end_offset: usize,
    invariants: Vec<String>,
}

const TYPE_WORDS: &[&str] = &["int", "unsigned", "signed", "long", "short", "const", "volatile", "static"];

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        Ok(Parser { src, tokens: tokenize(src)?, pos: 0, decls: Vec::new(), scope: Scope::Prelude, check_decls: true })
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, ahead: usize) -> &TokenKind {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn loc(&self) -> Location {
        self.tokens[self.pos].loc
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), TokenKind::Punct(q) if *q == p)
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), TokenKind::Ident(w) if w == word)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            TokenKind::Ident(name) if !name.starts_with('\\') => {
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Int(v, _) => format!("`{v}`"),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::AnnotationStart => "annotation".to_string(),
            TokenKind::AnnotationEnd => "end of annotation".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        };
        ParseError::syntax(self.loc(), format!("expected {wanted}, found {found}"))
    }

    // ---------------------------------------------------------------- top level

    fn program(mut self) -> Result<AnnotatedProgram, ParseError> {
        let mut function: Option<(String, ReturnType, Vec<Item>)> = None;
        let mut globals = Vec::new();
        while *self.peek() != TokenKind::Eof {
            if self.is_ident("extern") || self.is_ident("typedef") {
                self.skip_declaration()?;
                continue;
            }
            let loc = self.loc();
            let (ret, kind) = self.type_prefix()?;
            let name = self.expect_ident()?;
            if self.is_punct("(") {
                self.advance();
                self.parameters()?;
                if self.eat_punct(";") {
                    continue; // prototype
                }
                if function.is_some() {
                    return Err(ParseError::unsupported(loc, "multiple functions"));
                }
                let ret = ret.ok_or_else(|| ParseError::unsupported(loc, "function return type"))?;
                self.expect_punct("{")?;
                self.scope = Scope::Prelude;
                let items = self.block_items(true)?;
                function = Some((name, ret, items));
            } else {
                let kind = kind.ok_or_else(|| ParseError::unsupported(loc, "void variable"))?;
                // globals are zero-initialized
                self.declare(&name, kind, loc)?;
                let init = if self.eat_punct("=") { Some(self.code_expr()?) } else { None };
                globals.push(self.initializer(&name, init.unwrap_or(Expr::Int(0))));
                while self.eat_punct(",") {
                    let loc = self.loc();
                    let name = self.expect_ident()?;
                    self.declare(&name, kind, loc)?;
                    let init = if self.eat_punct("=") { Some(self.code_expr()?) } else { None };
                    globals.push(self.initializer(&name, init.unwrap_or(Expr::Int(0))));
                }
                self.expect_punct(";")?;
            }
        }
        let Some((name, returns, items)) = function else {
            return Err(ParseError::unsupported(self.loc(), "no function definition"));
        };
        self.assemble(name, returns, globals, items)
    }

    fn assemble(
        self,
        name: String,
        returns: ReturnType,
        globals: Vec<Stmt>,
        items: Vec<Item>,
    ) -> Result<AnnotatedProgram, ParseError> {
        let mut prelude = globals;
        let mut epilogue = Vec::new();
        let mut the_loop: Option<LoopParts> = None;
        for item in items {
            match item {
                Item::Stmt(s) if the_loop.is_none() => prelude.push(s),
                Item::Stmt(s) => epilogue.push(s),
                Item::Loop(parts) => {
                    if the_loop.is_some() {
                        return Err(ParseError::unsupported(parts.location, "multiple loops"));
                    }
                    the_loop = Some(parts);
                }
            }
        }
        let Some(lp) = the_loop else {
            return Err(ParseError::unsupported(Location::new(1, 1), "no loop"));
        };
        prelude.push(lp.init);
        let line_start = self.src[..lp.keyword_offset].rfind('\n').map_or(0, |i| i + 1);
        let (annotation_span, candidates) = match lp.annotation {
            Some(a) => (
                Some((a.start_offset, a.end_offset)),
                CandidateSet::from_sources(a.invariants.iter().map(String::as_str)),
            ),
            None => (None, CandidateSet::new()),
        };
        let program = Program {
            name,
            returns,
            decls: self.decls,
            prelude: Stmt::seq(prelude),
            guard: lp.guard,
            body: lp.body,
            epilogue: Stmt::seq(epilogue),
            loop_location: lp.location,
            source_text: self.src.to_string(),
            loop_line_offset: line_start,
            annotation_span,
        };
        Ok(AnnotatedProgram { program, candidates })
    }

    fn skip_declaration(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                TokenKind::Eof => return Err(self.unexpected("`;`")),
                TokenKind::Punct("(") | TokenKind::Punct("{") => depth += 1,
                TokenKind::Punct(")") | TokenKind::Punct("}") => depth = depth.saturating_sub(1),
                TokenKind::Punct(";") if depth == 0 => {
                    self.advance();
                    return Ok(());
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn parameters(&mut self) -> Result<(), ParseError> {
        if self.eat_punct(")") {
            return Ok(());
        }
        if self.is_ident("void") && matches!(self.peek_at(1), TokenKind::Punct(")")) {
            self.advance();
            self.advance();
            return Ok(());
        }
        Err(ParseError::unsupported(self.loc(), "function parameters"))
    }

    /// Parse a type; returns the function return type it denotes (if usable as
    /// one) and the integer kind (if usable for a variable).
    fn type_prefix(&mut self) -> Result<(Option<ReturnType>, Option<IntKind>), ParseError> {
        let loc = self.loc();
        if self.is_ident("void") {
            self.advance();
            if self.is_punct("*") {
                return Err(ParseError::unsupported(self.loc(), "pointer"));
            }
            return Ok((Some(ReturnType::Void), None));
        }
        let mut saw_type = false;
        let mut unsigned = false;
        while let TokenKind::Ident(word) = self.peek().clone() {
            match word.as_str() {
                "unsigned" => unsigned = true,
                w if TYPE_WORDS.contains(&w) => {}
                "float" | "double" => return Err(ParseError::unsupported(loc, "floating point")),
                "char" | "_Bool" | "bool" | "struct" | "union" | "enum" => {
                    return Err(ParseError::unsupported(loc, format!("type `{word}`")))
                }
                _ => break,
            }
            saw_type = true;
            self.advance();
        }
        if !saw_type {
            return Err(self.unexpected("type"));
        }
        if self.is_punct("*") {
            return Err(ParseError::unsupported(self.loc(), "pointer"));
        }
        let kind = if unsigned { IntKind::Unsigned } else { IntKind::Signed };
        let ret = if unsigned { None } else { Some(ReturnType::Int) };
        Ok((ret, Some(kind)))
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            TokenKind::Ident(w) => {
                TYPE_WORDS.contains(&w.as_str())
                    || matches!(w.as_str(), "float" | "double" | "char" | "_Bool" | "bool" | "struct")
            }
            _ => false,
        }
    }

    fn declare(&mut self, name: &str, kind: IntKind, loc: Location) -> Result<(), ParseError> {
        if let Some(existing) = self.decls.iter().find(|d| d.name == name) {
            if existing.kind != kind {
                return Err(ParseError::syntax(loc, format!("conflicting declarations of `{name}`")));
            }
            return Ok(());
        }
        if is_intrinsic(name) {
            return Err(ParseError::syntax(loc, format!("`{name}` is reserved")));
        }
        self.decls.push(Decl { name: name.to_string(), kind, scope: self.scope });
        Ok(())
    }

    fn initializer(&self, name: &str, value: Expr) -> Stmt {
        match value {
            Expr::Nondet(kind) => Stmt::Havoc(name.to_string(), kind),
            other => Stmt::Assign(name.to_string(), other),
        }
    }

    // ---------------------------------------------------------------- statements

    /// Items of a `{ ... }` block whose opening brace was consumed. Loops are
    /// only accepted when `top_level` is set.
    fn block_items(&mut self, top_level: bool) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == TokenKind::Eof {
                return Err(self.unexpected("`}`"));
            }
            items.push(self.item(top_level)?);
        }
        Ok(items)
    }

    fn item(&mut self, top_level: bool) -> Result<Item, ParseError> {
        if *self.peek() == TokenKind::AnnotationStart && self.annotation_is_loop_contract() {
            let annotation = self.loop_annotation()?;
            if !(self.is_ident("while") || self.is_ident("for") || self.is_ident("do")) {
                return Err(ParseError::syntax(self.loc(), "loop annotation must precede a loop"));
            }
            return self.loop_item(top_level, Some(annotation));
        }
        if self.is_ident("while") || self.is_ident("for") || self.is_ident("do") {
            return self.loop_item(top_level, None);
        }
        Ok(Item::Stmt(self.statement()?))
    }

    fn annotation_is_loop_contract(&self) -> bool {
        matches!(self.peek_at(1), TokenKind::Ident(w) if w == "loop")
            || matches!(self.peek_at(1), TokenKind::AnnotationEnd)
    }

    fn loop_annotation(&mut self) -> Result<LoopAnnotation, ParseError> {
        let start = self.offset();
        let start_line = self.src[..start].rfind('\n').map_or(0, |i| i + 1);
        let line_prefix_blank = self.src[start_line..start].trim().is_empty();
        self.advance(); // AnnotationStart
        let mut invariants = Vec::new();
        loop {
            match self.peek().clone() {
                TokenKind::AnnotationEnd => {
                    let end_tok = self.advance();
                    // `*/` is two bytes; include the rest of the line
                    let mut end = end_tok.offset + 2;
                    let rest = &self.src[end..];
                    let newline = rest.find('\n');
                    if let Some(nl) = newline {
                        if rest[..nl].trim().is_empty() {
                            end += nl + 1;
                        }
                    }
                    let start = if line_prefix_blank { start_line } else { start };
                    return Ok(LoopAnnotation { start_offset: start, end_offset: end, invariants });
                }
                TokenKind::Ident(w) if w == "loop" => {
                    self.advance();
                    let clause = self.expect_ident()?;
                    let text_start = self.offset();
                    let mut depth = 0usize;
                    loop {
                        match self.peek() {
                            TokenKind::Punct("(") => depth += 1,
                            TokenKind::Punct(")") => depth = depth.saturating_sub(1),
                            TokenKind::Punct(";") if depth == 0 => break,
                            TokenKind::AnnotationEnd | TokenKind::Eof => {
                                return Err(self.unexpected("`;` ending the loop clause"))
                            }
                            _ => {}
                        }
                        self.advance();
                    }
                    let text = self.src[text_start..self.offset()].trim().to_string();
                    self.advance(); // ;
                    match clause.as_str() {
                        "invariant" => invariants.push(text),
                        "assigns" | "variant" => log::debug!("ignoring loop {clause} clause"),
                        other => return Err(ParseError::unsupported(self.loc(), format!("loop {other} clause"))),
                    }
                }
                _ => return Err(self.unexpected("`loop invariant` clause")),
            }
        }
    }

    fn loop_item(&mut self, top_level: bool, annotation: Option<LoopAnnotation>) -> Result<Item, ParseError> {
        let location = self.loc();
        let keyword_offset = self.offset();
        if !top_level {
            return Err(ParseError::unsupported(location, "nested or conditional loop"));
        }
        if self.is_ident("do") {
            return Err(ParseError::unsupported(location, "do-while loop"));
        }
        let outer_scope = self.scope;
        if self.is_ident("while") {
            self.advance();
            self.expect_punct("(")?;
            let guard = self.condition()?;
            self.expect_punct(")")?;
            self.scope = Scope::Body;
            let body = self.loop_body()?;
            self.scope = Scope::Epilogue;
            let _ = outer_scope;
            return Ok(Item::Loop(LoopParts { guard, body, init: Stmt::Skip, location, keyword_offset, annotation }));
        }
        // for (init; cond; step) body
        self.advance();
        self.expect_punct("(")?;
        let init = if self.eat_punct(";") {
            Stmt::Skip
        } else if self.starts_type() {
            self.declaration()?
        } else {
            let s = self.simple_statement_list()?;
            self.expect_punct(";")?;
            s
        };
        let guard = if self.is_punct(";") { Expr::tt() } else { self.condition()? };
        self.expect_punct(";")?;
        self.scope = Scope::Body;
        let step = if self.is_punct(")") { Stmt::Skip } else { self.simple_statement_list()? };
        self.expect_punct(")")?;
        let body = self.loop_body()?;
        self.scope = Scope::Epilogue;
        Ok(Item::Loop(LoopParts { guard, body: Stmt::seq([body, step]), init, location, keyword_offset, annotation }))
    }

    fn loop_body(&mut self) -> Result<Stmt, ParseError> {
        if self.eat_punct("{") {
            let items = self.block_items(false)?;
            Ok(Stmt::seq(items.into_iter().map(|i| match i {
                Item::Stmt(s) => s,
                Item::Loop(_) => Stmt::Skip,
            })))
        } else {
            match self.item(false)? {
                Item::Stmt(s) => Ok(s),
                Item::Loop(_) => unreachable!("nested loops are rejected by item()"),
            }
        }
    }

    /// Comma-separated simple statements (assignments, increments).
    fn simple_statement_list(&mut self) -> Result<Stmt, ParseError> {
        let mut out = vec![self.simple_statement()?];
        while self.eat_punct(",") {
            out.push(self.simple_statement()?);
        }
        Ok(Stmt::seq(out))
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            TokenKind::Punct(";") => {
                self.advance();
                Ok(Stmt::Skip)
            }
            TokenKind::Punct("{") => {
                self.advance();
                let items = self.block_items(false)?;
                Ok(Stmt::seq(items.into_iter().map(|i| match i {
                    Item::Stmt(s) => s,
                    Item::Loop(_) => Stmt::Skip,
                })))
            }
            TokenKind::AnnotationStart => self.statement_annotation(),
            TokenKind::Ident(word) => match word.as_str() {
                "if" => self.if_statement(),
                "return" => {
                    self.advance();
                    if !self.is_punct(";") {
                        self.code_expr()?;
                    }
                    self.expect_punct(";")?;
                    Ok(Stmt::Return)
                }
                "while" | "for" | "do" => Err(ParseError::unsupported(loc, "nested or conditional loop")),
                "break" | "continue" | "goto" | "switch" => {
                    Err(ParseError::unsupported(loc, format!("`{word}` statement")))
                }
                _ if self.starts_type() => self.declaration(),
                _ => {
                    if matches!(self.peek_at(1), TokenKind::Punct(":")) {
                        return Err(ParseError::unsupported(loc, "label"));
                    }
                    let s = self.simple_statement()?;
                    self.expect_punct(";")?;
                    Ok(s)
                }
            },
            TokenKind::Punct("++") | TokenKind::Punct("--") => {
                let s = self.simple_statement()?;
                self.expect_punct(";")?;
                Ok(s)
            }
            _ => Err(self.unexpected("statement")),
        }
    }

    fn statement_annotation(&mut self) -> Result<Stmt, ParseError> {
        self.advance();
        let loc = self.loc();
        if !self.is_ident("assert") {
            return Err(ParseError::unsupported(loc, "annotation other than `assert`"));
        }
        self.advance();
        let e = self.annotation_expr()?;
        self.expect_punct(";")?;
        if *self.peek() != TokenKind::AnnotationEnd {
            return Err(self.unexpected("end of annotation"));
        }
        self.advance();
        Ok(Stmt::Assert(e, loc))
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        self.advance();
        self.expect_punct("(")?;
        let cond = self.condition()?;
        self.expect_punct(")")?;
        let then = self.branch()?;
        let otherwise = if self.is_ident("else") {
            self.advance();
            self.branch()?
        } else {
            Stmt::Skip
        };
        Ok(Stmt::IfElse(cond, Box::new(then), Box::new(otherwise)))
    }

    fn branch(&mut self) -> Result<Stmt, ParseError> {
        if self.is_ident("while") || self.is_ident("for") || self.is_ident("do") {
            return Err(ParseError::unsupported(self.loc(), "nested or conditional loop"));
        }
        self.statement()
    }

    fn declaration(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        let (_, kind) = self.type_prefix()?;
        let kind = kind.ok_or_else(|| ParseError::unsupported(loc, "void variable"))?;
        let mut out = Vec::new();
        loop {
            let loc = self.loc();
            if self.is_punct("*") {
                return Err(ParseError::unsupported(loc, "pointer"));
            }
            let name = self.expect_ident()?;
            if self.is_punct("[") {
                return Err(ParseError::unsupported(self.loc(), "array"));
            }
            self.declare(&name, kind, loc)?;
            if self.eat_punct("=") {
                let value = self.code_expr()?;
                out.push(self.initializer(&name, value));
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(Stmt::seq(out))
    }

    /// Assignment, compound assignment, increment, or intrinsic call; no
    /// trailing `;`.
    fn simple_statement(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        if self.is_punct("++") || self.is_punct("--") {
            let inc = self.is_punct("++");
            self.advance();
            let name = self.variable_name()?;
            return Ok(increment(&name, inc));
        }
        let name = match self.peek().clone() {
            TokenKind::Ident(name) => name,
            _ => return Err(self.unexpected("statement")),
        };
        if self.is_punct_at(1, "(") {
            return self.call_statement(&name, loc);
        }
        let name = self.variable_name()?;
        match self.peek().clone() {
            TokenKind::Punct("++") => {
                self.advance();
                Ok(increment(&name, true))
            }
            TokenKind::Punct("--") => {
                self.advance();
                Ok(increment(&name, false))
            }
            TokenKind::Punct("=") => {
                self.advance();
                let value = self.code_expr()?;
                if self.is_punct("=") {
                    return Err(ParseError::unsupported(self.loc(), "chained assignment"));
                }
                Ok(self.initializer(&name, value))
            }
            TokenKind::Punct(op @ ("+=" | "-=" | "*=" | "/=" | "%=")) => {
                self.advance();
                let rhs = self.code_expr()?;
                let bop = match op {
                    "+=" => BinaryOp::Add,
                    "-=" => BinaryOp::Sub,
                    "*=" => BinaryOp::Mul,
                    "/=" => BinaryOp::Div,
                    _ => BinaryOp::Mod,
                };
                let value = Expr::binary(bop, Expr::var(name.clone()), rhs);
                self.check_divisors(&value, loc)?;
                Ok(Stmt::Assign(name, value))
            }
            _ => Err(self.unexpected("assignment")),
        }
    }

    fn is_punct_at(&self, ahead: usize, p: &str) -> bool {
        matches!(self.peek_at(ahead), TokenKind::Punct(q) if *q == p)
    }

    fn call_statement(&mut self, name: &str, loc: Location) -> Result<Stmt, ParseError> {
        self.advance();
        self.expect_punct("(")?;
        let stmt = match name {
            "assume" => Stmt::Assume(self.condition()?),
            "assert" => Stmt::Assert(self.condition()?, loc),
            "abort" => Stmt::Assume(Expr::ff()),
            "exit" => {
                if !self.is_punct(")") {
                    self.code_expr()?;
                }
                Stmt::Return
            }
            "unknown_int" | "unknown_uint" => Stmt::Skip,
            "unknown_float" | "unknown_double" => return Err(ParseError::unsupported(loc, "floating point")),
            other => return Err(ParseError::unsupported(loc, format!("call to `{other}`"))),
        };
        self.expect_punct(")")?;
        Ok(stmt)
    }

    fn variable_name(&mut self) -> Result<String, ParseError> {
        let loc = self.loc();
        let name = self.expect_ident()?;
        if self.check_decls && !self.decls.iter().any(|d| d.name == name) {
            return Err(ParseError::syntax(loc, format!("undeclared variable `{name}`")));
        }
        if self.is_punct("[") {
            return Err(ParseError::unsupported(self.loc(), "array"));
        }
        Ok(name)
    }

    // ---------------------------------------------------------------- expressions

    fn code_expr(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let e = self.expr(ExprContext::Code)?;
        let e = as_int(e, loc)?;
        self.check_divisors(&e, loc)?;
        Ok(e)
    }

    fn condition(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let e = self.expr(ExprContext::Code)?;
        self.check_divisors(&e, loc)?;
        Ok(as_bool(e))
    }

    fn annotation_expr(&mut self) -> Result<Expr, ParseError> {
        let e = self.expr(ExprContext::Annotation)?;
        Ok(as_bool(e))
    }

    /// Program statements may only divide by nonzero literals.
    fn check_divisors(&self, e: &Expr, loc: Location) -> Result<(), ParseError> {
        if e.unguarded_divisors().is_empty() {
            Ok(())
        } else {
            Err(ParseError::unsupported(loc, "division by a non-constant in program code"))
        }
    }

    fn expr(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        self.iff(ctx)
    }

    fn iff(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let mut lhs = self.implication(ctx)?;
        while self.eat_punct("<==>") {
            let rhs = self.implication(ctx)?;
            lhs = Expr::binary(BinaryOp::Iff, as_bool(lhs), as_bool(rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let lhs = self.ternary(ctx)?;
        if self.eat_punct("==>") {
            let rhs = self.implication(ctx)?;
            return Ok(Expr::implies(as_bool(lhs), as_bool(rhs)));
        }
        Ok(lhs)
    }

    fn ternary(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let cond = self.disjunction(ctx)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let loc = self.loc();
        let then = self.expr(ctx)?;
        self.expect_punct(":")?;
        let otherwise = self.ternary(ctx)?;
        let (then, otherwise) = match (then.sort(), otherwise.sort()) {
            (Sort::Int, Sort::Int) | (Sort::Bool, Sort::Bool) => (then, otherwise),
            _ => (as_bool(then), as_bool(otherwise)),
        };
        let _ = loc;
        Ok(Expr::Ite(Box::new(as_bool(cond)), Box::new(then), Box::new(otherwise)))
    }

    fn disjunction(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let mut lhs = self.conjunction(ctx)?;
        while self.eat_punct("||") {
            let rhs = self.conjunction(ctx)?;
            lhs = Expr::or(as_bool(lhs), as_bool(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let mut lhs = self.comparison(ctx)?;
        while self.eat_punct("&&") {
            let rhs = self.comparison(ctx)?;
            lhs = Expr::and(as_bool(lhs), as_bool(rhs));
        }
        Ok(lhs)
    }

    /// Relational and equality operators. A chain `a < b <= c` means
    /// `a < b && b <= c`.
    fn comparison(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let first_loc = self.loc();
        let first = self.additive(ctx)?;
        let mut links: Vec<(BinaryOp, Expr, Location)> = Vec::new();
        loop {
            let op = match self.peek() {
                TokenKind::Punct("==") => BinaryOp::Eq,
                TokenKind::Punct("!=") => BinaryOp::Ne,
                TokenKind::Punct("<") => BinaryOp::Lt,
                TokenKind::Punct("<=") => BinaryOp::Le,
                TokenKind::Punct(">") => BinaryOp::Gt,
                TokenKind::Punct(">=") => BinaryOp::Ge,
                _ => break,
            };
            self.advance();
            let loc = self.loc();
            links.push((op, self.additive(ctx)?, loc));
        }
        if links.is_empty() {
            return Ok(first);
        }
        let mut lhs = as_int(first, first_loc)?;
        let mut parts = Vec::new();
        for (op, rhs, loc) in links {
            let rhs = as_int(rhs, loc)?;
            parts.push(Expr::binary(op, lhs, rhs.clone()));
            lhs = rhs;
        }
        Ok(Expr::conjunction(parts))
    }

    fn additive(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let mut lhs = self.multiplicative(ctx)?;
        loop {
            let op = match self.peek() {
                TokenKind::Punct("+") => BinaryOp::Add,
                TokenKind::Punct("-") => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rloc = self.loc();
            let rhs = self.multiplicative(ctx)?;
            lhs = Expr::binary(op, as_int(lhs, loc)?, as_int(rhs, rloc)?);
        }
    }

    fn multiplicative(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let mut lhs = self.unary(ctx)?;
        loop {
            let op = match self.peek() {
                TokenKind::Punct("*") => BinaryOp::Mul,
                TokenKind::Punct("/") => BinaryOp::Div,
                TokenKind::Punct("%") => BinaryOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rloc = self.loc();
            let rhs = self.unary(ctx)?;
            lhs = Expr::binary(op, as_int(lhs, loc)?, as_int(rhs, rloc)?);
        }
    }

    fn unary(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            TokenKind::Punct("-") => {
                self.advance();
                if let TokenKind::Int(v, unsigned) = *self.peek() {
                    // fold into a negative literal unless a postfix-binding
                    // operator follows
                    self.advance();
                    let _ = unsigned;
                    return Ok(Expr::Int(-v));
                }
                let operand = self.unary(ctx)?;
                Ok(Expr::neg(as_int(operand, loc)?))
            }
            TokenKind::Punct("+") => {
                self.advance();
                let operand = self.unary(ctx)?;
                as_int(operand, loc)
            }
            TokenKind::Punct("!") => {
                self.advance();
                let operand = self.unary(ctx)?;
                Ok(Expr::not(as_bool(operand)))
            }
            TokenKind::Punct("~") | TokenKind::Punct("&") | TokenKind::Punct("*") => {
                Err(ParseError::unsupported(loc, "bitwise or pointer operator"))
            }
            TokenKind::Punct("++") | TokenKind::Punct("--") => {
                Err(ParseError::unsupported(loc, "increment inside an expression"))
            }
            _ => self.primary(ctx),
        }
    }

    fn primary(&mut self, ctx: ExprContext) -> Result<Expr, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            TokenKind::Int(v, _) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            TokenKind::Punct("(") => {
                self.advance();
                if self.starts_type() {
                    return Err(ParseError::unsupported(loc, "cast"));
                }
                let e = self.expr(ctx)?;
                self.expect_punct(")")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "\\true" | "true" => return Ok(Expr::tt()),
                    "\\false" | "false" => return Ok(Expr::ff()),
                    _ => {}
                }
                if name.starts_with('\\') {
                    return Err(ParseError::unsupported(loc, format!("`{name}`")));
                }
                if self.is_punct("(") {
                    return self.call_expr(&name, loc, ctx);
                }
                if self.is_punct("[") {
                    return Err(ParseError::unsupported(self.loc(), "array"));
                }
                if self.is_punct("->") || self.is_punct(".") {
                    return Err(ParseError::unsupported(self.loc(), "member access"));
                }
                if self.is_punct("++") || self.is_punct("--") {
                    return Err(ParseError::unsupported(self.loc(), "increment inside an expression"));
                }
                if ctx == ExprContext::Code && self.check_decls && !self.decls.iter().any(|d| d.name == name) {
                    return Err(ParseError::syntax(loc, format!("undeclared variable `{name}`")));
                }
                Ok(Expr::Var(name))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn call_expr(&mut self, name: &str, loc: Location, ctx: ExprContext) -> Result<Expr, ParseError> {
        let kind = match name {
            "unknown_int" | "unknown" => NondetKind::Int,
            "unknown_uint" => NondetKind::UInt,
            "unknown_float" | "unknown_double" => return Err(ParseError::unsupported(loc, "floating point")),
            other => return Err(ParseError::unsupported(loc, format!("call to `{other}`"))),
        };
        if ctx == ExprContext::Annotation {
            return Err(ParseError::unsupported(loc, "nondeterministic call in annotation"));
        }
        self.advance();
        self.expect_punct(")")?;
        Ok(Expr::Nondet(kind))
    }
}

fn increment(name: &str, up: bool) -> Stmt {
    let op = if up { BinaryOp::Add } else { BinaryOp::Sub };
    Stmt::Assign(name.to_string(), Expr::binary(op, Expr::var(name), Expr::Int(1)))
}

fn is_intrinsic(name: &str) -> bool {
    matches!(name, "unknown_int" | "unknown_uint" | "unknown" | "assume" | "assert" | "abort" | "exit")
}

/// Integer used as a condition means "nonzero".
fn as_bool(e: Expr) -> Expr {
    match e.sort() {
        Sort::Bool => e,
        Sort::Int => Expr::binary(BinaryOp::Ne, e, Expr::Int(0)),
    }
}

fn as_int(e: Expr, loc: Location) -> Result<Expr, ParseError> {
    match e.sort() {
        Sort::Int => Ok(e),
        Sort::Bool => Err(ParseError::unsupported(loc, "boolean value used as an integer")),
    }
}

/// Parse a mini-language program. Any loop annotation block is ignored; use
/// [`parse_annotated`] to read it.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_annotated(text).map(|a| a.program)
}

/// Parse a program and the `loop invariant` clauses attached to its loop.
pub fn parse_annotated(text: &str) -> Result<AnnotatedProgram, ParseError> {
    Parser::new(text)?.program()
}

/// Parse a standalone boolean expression in annotation syntax, without
/// checking variable declarations.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    p.check_decls = false;
    if *p.peek() == TokenKind::Eof {
        return Err(ParseError::syntax(p.loc(), "empty expression"));
    }
    let e = p.annotation_expr()?;
    p.eat_punct(";");
    if *p.peek() != TokenKind::Eof {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

/// Parse candidate invariant text. Failure is recorded in the returned value
/// rather than reported as an error.
pub fn parse_invariant(text: &str) -> CandidateInvariant {
    CandidateInvariant::new(0, text)
}
