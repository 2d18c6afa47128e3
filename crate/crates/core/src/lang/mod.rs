//! The mini-language: a C subset with integer scalars, one function and one
//! loop. See `book/src/grammar.md` for the accepted syntax.

pub mod annotate;
pub mod ast;
pub mod candidate;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod printer;

use thiserror::Error;

pub use annotate::annotate;
pub use ast::*;
pub use candidate::{CandidateInvariant, CandidateSet};
pub use parser::{parse_annotated, parse_expr, parse_invariant, parse_program, AnnotatedProgram};
pub use printer::{pretty_print, print_expr, print_stmt};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: Location, message: String },
    #[error("{loc}: unsupported feature: {feature}")]
    Unsupported { loc: Location, feature: String },
}

impl ParseError {
    pub fn syntax(loc: Location, message: impl Into<String>) -> Self {
        ParseError::Syntax { loc, message: message.into() }
    }

    pub fn unsupported(loc: Location, feature: impl Into<String>) -> Self {
        ParseError::Unsupported { loc, feature: feature.into() }
    }

    pub fn location(&self) -> Location {
        match self {
            ParseError::Syntax { loc, .. } | ParseError::Unsupported { loc, .. } => *loc,
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}
