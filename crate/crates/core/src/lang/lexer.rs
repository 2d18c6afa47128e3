//! Tokenizer for the mini-language. Ordinary comments are dropped here;
//! ACSL-style annotation comments (`//@ ...` and `/*@ ... */`) are kept as
//! bracketed token runs so the parser can read `assert` and
//! `loop invariant` clauses.

use super::ast::Location;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// Integer literal; the flag records a `u`/`U` suffix.
    Int(i64, bool),
    /// Any punctuation or operator, e.g. `==>`, `+=`, `{`.
    Punct(&'static str),
    /// Start of `//@` or `/*@`.
    AnnotationStart,
    /// End of an annotation (newline after `//@`, or `*/`).
    AnnotationEnd,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Location,
    /// Byte offset of the token start.
    pub offset: usize,
}

// longest first so that maximal munch works with a linear scan
const PUNCTS: &[&str] = &[
    "<==>", "==>", "<<=", ">>=", "...", "&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "*=", "/=", "%=",
    "->", "<<", ">>", "&=", "|=", "^=", "{", "}", "(", ")", "[", "]", ";", ",", "=", "<", ">", "+", "-", "*", "/", "%",
    "!", "?", ":", "&", "|", "^", "~", ".", "@",
];

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    in_line_annotation: bool,
    in_block_annotation: bool,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            in_line_annotation: false,
            in_block_annotation: false,
        }
    }

    fn loc(&self) -> Location {
        Location::new(self.line, self.col)
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if (c & 0xC0) != 0x80 {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.bytes[self.pos..].starts_with(s.as_bytes())
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia(&mut out)?;
            let loc = self.loc();
            let offset = self.pos;
            let Some(c) = self.peek(0) else {
                if self.in_line_annotation {
                    out.push(Token { kind: TokenKind::AnnotationEnd, loc, offset });
                }
                if self.in_block_annotation {
                    return Err(ParseError::syntax(loc, "unterminated annotation comment"));
                }
                out.push(Token { kind: TokenKind::Eof, loc, offset });
                return Ok(out);
            };
            let kind = if c.is_ascii_alphabetic() || c == b'_' || c == b'\\' {
                self.ident()
            } else if c.is_ascii_digit() {
                self.number(loc)?
            } else if c == b'"' || c == b'\'' {
                return Err(ParseError::unsupported(loc, "string or character literal"));
            } else {
                self.punct(loc)?
            };
            out.push(Token { kind, loc, offset });
        }
    }

    /// Skip whitespace, comments and preprocessor lines; emit annotation
    /// boundary tokens as they are crossed.
    fn skip_trivia(&mut self, out: &mut Vec<Token>) -> Result<(), ParseError> {
        loop {
            let Some(c) = self.peek(0) else { return Ok(()) };
            if c == b'\n' && self.in_line_annotation {
                out.push(Token { kind: TokenKind::AnnotationEnd, loc: self.loc(), offset: self.pos });
                self.in_line_annotation = false;
                self.bump();
                continue;
            }
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if self.in_block_annotation {
                if self.starts_with("*/") {
                    out.push(Token { kind: TokenKind::AnnotationEnd, loc: self.loc(), offset: self.pos });
                    self.bump();
                    self.bump();
                    self.in_block_annotation = false;
                    continue;
                }
                // ACSL allows a leading `@` on continuation lines
                if c == b'@' {
                    self.bump();
                    continue;
                }
                return Ok(());
            }
            if self.in_line_annotation {
                return Ok(());
            }
            if self.starts_with("//@") {
                out.push(Token { kind: TokenKind::AnnotationStart, loc: self.loc(), offset: self.pos });
                self.bump();
                self.bump();
                self.bump();
                self.in_line_annotation = true;
                continue;
            }
            if self.starts_with("/*@") {
                out.push(Token { kind: TokenKind::AnnotationStart, loc: self.loc(), offset: self.pos });
                self.bump();
                self.bump();
                self.bump();
                self.in_block_annotation = true;
                continue;
            }
            if self.starts_with("//") {
                while let Some(c) = self.peek(0) {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if self.starts_with("/*") {
                let loc = self.loc();
                self.bump();
                self.bump();
                loop {
                    if self.peek(0).is_none() {
                        return Err(ParseError::syntax(loc, "unterminated comment"));
                    }
                    if self.starts_with("*/") {
                        self.bump();
                        self.bump();
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == b'#' && self.at_line_start() {
                let loc = self.loc();
                let line_end = self.src[self.pos..].find('\n').map_or(self.src.len(), |i| self.pos + i);
                let directive = self.src[self.pos + 1..line_end].trim_start();
                let word: String = directive.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
                let is_marker = directive.starts_with(|c: char| c.is_ascii_digit()) || word == "line";
                if !(is_marker || word == "include" || word == "pragma") {
                    return Err(ParseError::unsupported(loc, format!("preprocessor directive #{word}")));
                }
                while self.pos < line_end {
                    self.bump();
                }
                continue;
            }
            return Ok(());
        }
    }

    fn at_line_start(&self) -> bool {
        self.src[..self.pos].rsplit('\n').next().is_none_or(|prefix| prefix.trim().is_empty())
    }

    fn ident(&mut self) -> TokenKind {
        let start = self.pos;
        self.bump();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        TokenKind::Ident(self.src[start..self.pos].to_string())
    }

    fn number(&mut self, loc: Location) -> Result<TokenKind, ParseError> {
        let start = self.pos;
        let hex = self.starts_with("0x") || self.starts_with("0X");
        if hex {
            self.bump();
            self.bump();
        }
        while let Some(c) = self.peek(0) {
            if c.is_ascii_hexdigit() && (hex || c.is_ascii_digit()) {
                self.bump();
            } else {
                break;
            }
        }
        let digits = &self.src[start..self.pos];
        let mut unsigned = false;
        while let Some(c) = self.peek(0) {
            match c {
                b'u' | b'U' => {
                    unsigned = true;
                    self.bump();
                }
                b'l' | b'L' => {
                    self.bump();
                }
                b'.' | b'e' | b'E' | b'f' | b'F' if !hex => {
                    return Err(ParseError::unsupported(loc, "floating-point literal"));
                }
                _ => break,
            }
        }
        let value = if hex { i64::from_str_radix(&digits[2..], 16) } else { digits.parse::<i64>() }
            .map_err(|_| ParseError::syntax(loc, format!("integer literal `{digits}` out of range")))?;
        Ok(TokenKind::Int(value, unsigned))
    }

    fn punct(&mut self, loc: Location) -> Result<TokenKind, ParseError> {
        for p in PUNCTS {
            if self.starts_with(p) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok(TokenKind::Punct(p));
            }
        }
        let ch = self.src[self.pos..].chars().next().unwrap_or('?');
        Err(ParseError::syntax(loc, format!("unexpected character `{ch}`")))
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).tokenize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(
            kinds("x /* a */ = 1; // tail"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Punct("="),
                TokenKind::Int(1, false),
                TokenKind::Punct(";"),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn annotations_are_bracketed() {
        let k = kinds("//@ assert x;\ny;");
        assert_eq!(k[0], TokenKind::AnnotationStart);
        assert_eq!(k[4], TokenKind::AnnotationEnd);
        assert_eq!(k[5], TokenKind::Ident("y".into()));
    }

    #[test]
    fn block_annotation_skips_leading_at() {
        let k = kinds("/*@ loop invariant a;\n  @ loop invariant b; */");
        assert!(!k.contains(&TokenKind::Punct("@")));
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Ident("invariant".into())).count(), 2);
    }

    #[test]
    fn maximal_munch() {
        assert_eq!(
            kinds("a ==> b <==> c"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Punct("==>"),
                TokenKind::Ident("b".into()),
                TokenKind::Punct("<==>"),
                TokenKind::Ident("c".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn line_markers_skipped_macros_rejected() {
        assert_eq!(kinds("# 1 \"x.c\"\n#include <stdio.h>\nx"), vec![TokenKind::Ident("x".into()), TokenKind::Eof]);
        assert!(matches!(tokenize("#define N 5\n"), Err(ParseError::Unsupported { .. })));
    }

    #[test]
    fn unsigned_suffix_and_hex() {
        assert_eq!(kinds("10U 0x1f"), vec![TokenKind::Int(10, true), TokenKind::Int(31, false), TokenKind::Eof]);
    }
}
