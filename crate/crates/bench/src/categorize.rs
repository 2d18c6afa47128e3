//! Lexical feature counts used to select the single-loop, single-method
//! slice of a corpus.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::normalize::{harness_ranges, strip_comments};

/// Files longer than this are left out.
pub const MAX_LINES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    /// `for` plus `while` keywords; a do-while contributes its `while`.
    pub loops: usize,
    /// Function definitions other than the verifier harness.
    pub methods: usize,
    pub arrays: bool,
    pub pointers: bool,
    pub lines: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exclusion {
    Size,
    Arrays,
    Pointers,
    Loops,
    Methods,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exclusion::Size => "size",
            Exclusion::Arrays => "arrays",
            Exclusion::Pointers => "pointers",
            Exclusion::Loops => "loops",
            Exclusion::Methods => "methods",
        })
    }
}

impl Category {
    /// `0`, `1` or `>1`.
    pub fn loop_class(&self) -> &'static str {
        bucket(self.loops)
    }

    /// `1` or `>1`; a file without functions reports `0`.
    pub fn method_class(&self) -> &'static str {
        bucket(self.methods)
    }

    /// First reason the file falls outside the studied slice.
    pub fn exclusion(&self) -> Option<Exclusion> {
        if self.lines > MAX_LINES {
            Some(Exclusion::Size)
        } else if self.arrays {
            Some(Exclusion::Arrays)
        } else if self.pointers {
            Some(Exclusion::Pointers)
        } else if self.loops != 1 {
            Some(Exclusion::Loops)
        } else if self.methods != 1 {
            Some(Exclusion::Methods)
        } else {
            None
        }
    }

    pub fn in_slice(&self) -> bool {
        self.exclusion().is_none()
    }
}

fn bucket(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        _ => ">1",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
    Other,
}

const PUNCTS: &[&str] = &["->", "[", "]", "(", ")", "{", "}", "*", "&", "=", ",", ";"];

fn tokens(src: &str) -> Vec<Tok> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line_start = true;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && line_start {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == b'"' || c == b'\'' {
            i += 1;
            while i < b.len() && b[i] != c && b[i] != b'\n' {
                i += if b[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
            out.push(Tok::Other);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
        } else if let Some(p) = PUNCTS.iter().find(|p| b[i..].starts_with(p.as_bytes())) {
            i += p.len();
            out.push(Tok::Punct(p));
        } else {
            i += 1;
            out.push(Tok::Other);
        }
    }
    out
}

const TYPE_WORDS: &[&str] =
    &["int", "char", "void", "unsigned", "signed", "long", "short", "float", "double", "_Bool", "const", "struct"];

/// Count loops and functions and flag arrays and pointers, ignoring
/// comments, annotations and the verifier harness.
pub fn categorize(source: &str) -> Category {
    let lines = source.lines().count();
    let stripped = strip_comments(source, false);
    let mut code = String::with_capacity(stripped.len());
    let mut last = 0;
    for (a, z) in harness_ranges(&stripped) {
        code.push_str(&stripped[last..a]);
        last = z;
    }
    code.push_str(&stripped[last..]);

    let toks = tokens(&code);
    let mut cat = Category { loops: 0, methods: 0, arrays: false, pointers: false, lines };
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &toks[j]);
        match t {
            Tok::Ident(w) if w == "for" || w == "while" => cat.loops += 1,
            Tok::Ident(_) if depth == 0 && toks.get(i + 1) == Some(&Tok::Punct("(")) => {
                if is_definition(&toks, i + 1) {
                    cat.methods += 1;
                }
            }
            Tok::Punct("{") => depth += 1,
            Tok::Punct("}") => depth = depth.saturating_sub(1),
            Tok::Punct("[") => cat.arrays = true,
            Tok::Punct("->") => cat.pointers = true,
            Tok::Punct("*") => {
                if matches!(prev, Some(Tok::Ident(w)) if TYPE_WORDS.contains(&w.as_str())) {
                    cat.pointers = true;
                }
            }
            Tok::Punct("&") => {
                let unary = match prev {
                    None => true,
                    Some(Tok::Punct(p)) => matches!(*p, "(" | "," | "=" | ";" | "{" | "&"),
                    Some(Tok::Ident(w)) => w == "return",
                    Some(Tok::Other) => false,
                };
                let logical = toks.get(i + 1) == Some(&Tok::Punct("&")) || prev == Some(&Tok::Punct("&"));
                if unary && !logical {
                    cat.pointers = true;
                }
            }
            _ => {}
        }
    }
    cat
}

/// Whether the parenthesis at `open` is followed by a body.
fn is_definition(toks: &[Tok], open: usize) -> bool {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        match t {
            Tok::Punct("(") => depth += 1,
            Tok::Punct(")") => {
                depth -= 1;
                if depth == 0 {
                    return toks.get(i + 1) == Some(&Tok::Punct("{"));
                }
            }
            _ => {}
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_loops_and_methods() {
        let c = categorize("int f() { return 1; }\nint main() { do { x++; } while (x < 3); for (;;) {} }");
        assert_eq!((c.loops, c.methods), (2, 2));
        assert_eq!(c.exclusion(), Some(Exclusion::Loops));
    }

    #[test]
    fn flags_arrays_and_pointers() {
        assert!(categorize("int main() { int a[3]; }").arrays);
        assert!(categorize("int main() { int *p; }").pointers);
        assert!(categorize("int main() { f(&x); }").pointers);
        let c = categorize("int main() { if (a && b & c) x = y * z; while (x) {} }");
        assert!(!c.pointers && !c.arrays);
        assert!(c.in_slice());
    }

    #[test]
    fn ignores_harness_and_comments() {
        let src = "void reach_error() {}\nvoid __VERIFIER_assert(int c) { if (!c) { ERROR: reach_error(); } }\n\
                   // while\nint main() { /* for */ while (x) x--; }";
        let c = categorize(src);
        assert_eq!((c.loops, c.methods), (1, 1));
    }
}
