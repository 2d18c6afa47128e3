//! Textual clean-up of SV-COMP style sources into the mini-language.

use std::sync::LazyLock;

use regex::Regex;

const ASSERT_FALSE: &str = "//@ assert (\\false);";

static HARNESS_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(__VERIFIER_\w+|reach_error|assume_abort_if_not)\s*\(").unwrap());
static NONDET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b__VERIFIER_nondet_(\w+)\s*\(\s*\)").unwrap());
static ASSUME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:__VERIFIER_assume|assume_abort_if_not)\s*\(").unwrap());
static ASSERT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b__VERIFIER_assert\s*\(").unwrap());
static ERROR_LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bERROR\s*:([^:]|$)").unwrap());
static ERROR_CALL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:reach_error|__VERIFIER_error)\s*\(\s*\)\s*;").unwrap());
static MAIN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(void|int|unsigned(?:\s+int)?|signed(?:\s+int)?|long|short|char|_Bool)\s+main\s*\(").unwrap()
});
static ENDS_WITH_RETURN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\breturn\b[^;{}]*;$").unwrap());
static LINE_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*#\s*(\d+|line)\b").unwrap());

/// Apply the benchmark modifications: drop comments, swap verifier
/// intrinsics for the mini-language ones, turn error labels into failing
/// assertions, give `main` a return statement, drop line markers.
///
/// Idempotent. Annotation comments (`//@`, `/*@`) are kept since they are
/// the output form of assertions.
pub fn normalize(source: &str) -> String {
    // one rewrite can expose another, so run to a fixed point
    let final_newline = ends_with_newline(source);
    let mut current = pass(source, final_newline);
    for _ in 0..16 {
        let next = pass(&current, final_newline);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn pass(source: &str, final_newline: bool) -> String {
    let mut s = strip_comments(source, true);
    s = remove_harness(&s);
    s = rewrite(s, &NONDET, |s, a, z| {
        let c = NONDET.captures(&s[a..z])?;
        let rep = format!("{}()", nondet_intrinsic(&c[1]));
        s.replace_range(a..z, &rep);
        Some(a + rep.len())
    });
    s = rewrite(s, &ASSUME, |s, a, z| {
        s.replace_range(a..z, "assume(");
        Some(a + "assume(".len())
    });
    s = rewrite_asserts(s);
    s = rewrite_error_labels(s);
    s = rewrite(s, &ERROR_CALL, |s, a, z| Some(splice_annotation(s, a, z, ASSERT_FALSE)));
    s = add_default_return(&s);
    s = s.lines().filter(|l| !LINE_MARKER.is_match(l)).collect::<Vec<_>>().join("\n");
    tidy(&s, final_newline)
}

fn nondet_intrinsic(suffix: &str) -> &'static str {
    match suffix {
        "uint" | "unsigned" | "unsigned_int" | "ulong" | "ushort" | "uchar" | "size_t" | "u32" => "unknown_uint",
        "float" | "double" => "unknown_float",
        _ => "unknown_int",
    }
}

fn ends_with_newline(s: &str) -> bool {
    s.trim_end_matches([' ', '\t', '\r']).ends_with('\n')
}

/// Remove `//` and `/* */` comments outside string and character literals.
/// With `keep_annotations`, comments starting with `@` stay.
pub fn strip_comments(source: &str, keep_annotations: bool) -> String {
    let b = source.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => {
                let end = literal_end(b, i);
                out.extend_from_slice(&b[i..end]);
                i = end;
            }
            b'/' if b.get(i + 1) == Some(&b'/') => {
                let end = b[i..].iter().position(|&c| c == b'\n').map_or(b.len(), |p| i + p);
                if keep_annotations && b.get(i + 2) == Some(&b'@') {
                    out.extend_from_slice(&b[i..end]);
                }
                i = end;
            }
            b'/' if b.get(i + 1) == Some(&b'*') => {
                let end = find(b, i + 2, b"*/").map_or(b.len(), |p| p + 2);
                if keep_annotations && b.get(i + 2) == Some(&b'@') {
                    out.extend_from_slice(&b[i..end]);
                } else if b[i..end].contains(&b'\n') {
                    out.push(b'\n');
                } else {
                    out.push(b' ');
                }
                i = end;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    String::from_utf8(out).expect("only ASCII delimited ranges are removed")
}

/// End of the literal opened by the quote at `start`; stops at a newline.
fn literal_end(b: &[u8], start: usize) -> usize {
    let quote = b[start];
    let mut i = start + 1;
    while i < b.len() {
        match b[i] {
            b'\\' if b.get(i + 1) != Some(&b'\n') => i += 2,
            b'\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    b.len()
}

fn find(b: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    (from..b.len().saturating_sub(needle.len() - 1)).find(|&i| b[i..].starts_with(needle))
}

/// Index just past the bracket closing the one at `open`, skipping literals.
fn matching(b: &[u8], open: usize) -> Option<usize> {
    let (o, c) = match b[open] {
        b'(' => (b'(', b')'),
        b'{' => (b'{', b'}'),
        _ => return None,
    };
    let mut depth = 0usize;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => {
                i = literal_end(b, i);
                continue;
            }
            b'/' if b.get(i + 1) == Some(&b'/') => {
                i = line_end(b, i);
                continue;
            }
            x if x == o => depth += 1,
            x if x == c => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Brace depth before each byte.
fn brace_depths(b: &[u8]) -> Vec<usize> {
    let mut depths = Vec::with_capacity(b.len() + 1);
    let mut depth = 0usize;
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'"' || b[i] == b'\'' {
            let end = literal_end(b, i);
            depths.extend(std::iter::repeat_n(depth, end - i));
            i = end;
            continue;
        }
        depths.push(depth);
        match b[i] {
            b'{' => depth += 1,
            b'}' => depth = depth.saturating_sub(1),
            _ => {}
        }
        i += 1;
    }
    depths.push(depth);
    depths
}

const SPECIFIERS: &[&str] = &[
    "extern", "static", "inline", "__inline", "const", "volatile", "void", "int", "unsigned", "signed", "long",
    "short", "char", "float", "double", "_Bool",
];

/// Declarations and definitions of the verifier harness functions, as
/// byte ranges.
pub(crate) fn harness_ranges(s: &str) -> Vec<(usize, usize)> {
    let b = s.as_bytes();
    let depths = brace_depths(b);
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for m in HARNESS_NAME.find_iter(s) {
        if depths[m.start()] != 0 || ranges.last().is_some_and(|r| m.start() < r.1) {
            continue;
        }
        if in_literal(s, m.start()) {
            continue;
        }
        let start = declaration_start(b, m.start());
        let words: Vec<&str> =
            s[start..m.start()].split(|c: char| c.is_whitespace() || c == '*').filter(|w| !w.is_empty()).collect();
        if words.is_empty() || !words.iter().all(|w| SPECIFIERS.contains(w)) {
            continue; // a call, not a declaration
        }
        let Some(close) = matching(b, m.end() - 1) else {
            continue;
        };
        let mut end = None;
        let mut parens = 0usize;
        let mut i = close;
        while i < b.len() {
            match b[i] {
                b'"' | b'\'' => {
                    i = literal_end(b, i);
                    continue;
                }
                b'(' => parens += 1,
                b')' => parens = parens.saturating_sub(1),
                b';' if parens == 0 => {
                    end = Some(i + 1);
                    break;
                }
                b'{' if parens == 0 => {
                    end = matching(b, i);
                    break;
                }
                _ => {}
            }
            i += 1;
        }
        if let Some(end) = end {
            ranges.push((start, end));
        }
    }
    ranges
}

/// Start of the declaration whose declarator begins at `name`: back over
/// type words, stopping at punctuation or a preprocessor line.
fn declaration_start(b: &[u8], name: usize) -> usize {
    let mut i = name;
    while i > 0 {
        let c = b[i - 1];
        if c == b'\n' {
            let line_start = b[..i - 1].iter().rposition(|&x| x == b'\n').map_or(0, |p| p + 1);
            if b[line_start..i - 1].iter().find(|c| !c.is_ascii_whitespace()) == Some(&b'#') {
                break;
            }
        } else if !(c.is_ascii_alphanumeric() || c == b'_' || c == b'*' || c.is_ascii_whitespace()) {
            break;
        }
        i -= 1;
    }
    while i < name && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn remove_ranges(s: &str, ranges: &[(usize, usize)]) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last = 0;
    for &(a, z) in ranges {
        out.push_str(&s[last..a]);
        // keep line structure so literals on either side stay apart
        out.push(if s[a..z].contains('\n') { '\n' } else { ' ' });
        last = z;
    }
    out.push_str(&s[last..]);
    out
}

fn remove_harness(s: &str) -> String {
    remove_ranges(s, &harness_ranges(s))
}

/// Whether `pos` is inside a literal or a line annotation. Both end at a
/// newline, so scanning the current line suffices.
fn in_literal(s: &str, pos: usize) -> bool {
    let b = s.as_bytes();
    let mut i = s[..pos].rfind('\n').map_or(0, |p| p + 1);
    while i < pos {
        if b[i..].starts_with(b"//") {
            return true;
        }
        if b[i] == b'"' || b[i] == b'\'' {
            let end = literal_end(b, i);
            if end > pos {
                return true;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    false
}

/// Apply `edit` to each match of `re` outside literals. `edit` gets the
/// match range and returns where scanning resumes, or `None` to skip.
fn rewrite(mut s: String, re: &Regex, mut edit: impl FnMut(&mut String, usize, usize) -> Option<usize>) -> String {
    let mut from = 0;
    while let Some((a, z)) = re.find_at(&s, from).map(|m| (m.start(), m.end())) {
        from = if in_literal(&s, a) { z } else { edit(&mut s, a, z).unwrap_or(z) };
    }
    s
}

/// Replace `start..end` with a line annotation. Code left on the same line
/// moves to the next one, since the annotation would swallow it.
fn splice_annotation(s: &mut String, start: usize, mut end: usize, text: &str) -> usize {
    let line_start = s[..start].rfind('\n').map_or(0, |p| p + 1);
    let indent: String = s[line_start..start].chars().take_while(|c| *c == ' ' || *c == '\t').collect();
    let mut rep = String::new();
    if s[..start].ends_with(['/', '*']) {
        rep.push(' ');
    }
    rep.push_str(text);
    let line_end = s[end..].find('\n').map_or(s.len(), |p| end + p);
    let tail = &s[end..line_end];
    if !tail.trim().is_empty() {
        end += tail.len() - tail.trim_start().len();
        rep.push('\n');
        rep.push_str(&indent);
    }
    s.replace_range(start..end, &rep);
    start + rep.len()
}

fn rewrite_asserts(s: String) -> String {
    rewrite(s, &ASSERT, |s, start, open| {
        let b = s.as_bytes();
        let close = matching(b, open - 1)?;
        let arg = s[open..close - 1].split_whitespace().collect::<Vec<_>>().join(" ");
        let mut end = close;
        while end < b.len() && (b[end] == b' ' || b[end] == b'\t') {
            end += 1;
        }
        if b.get(end) == Some(&b';') {
            end += 1;
        }
        Some(splice_annotation(s, start, end, &format!("//@ assert ({arg});")))
    })
}

fn line_end(b: &[u8], from: usize) -> usize {
    b[from..].iter().position(|&c| c == b'\n').map_or(b.len(), |p| from + p)
}

/// Index past the `;` ending the statement at `from`, skipping literals.
fn statement_end(b: &[u8], from: usize) -> Option<usize> {
    let mut i = from;
    while i < b.len() {
        match b[i] {
            b'/' if b.get(i + 1) == Some(&b'/') => i = line_end(b, i),
            b'"' | b'\'' => i = literal_end(b, i),
            b';' => return Some(i + 1),
            b'{' | b'}' => return None,
            _ => i += 1,
        }
    }
    None
}

fn rewrite_error_labels(s: String) -> String {
    rewrite(s, &ERROR_LABEL, |s, start, _| {
        let b = s.as_bytes();
        let colon = start + s[start..].find(':')?;
        let mut i = colon + 1;
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        let end = match b.get(i) {
            Some(b'{') => matching(b, i),
            Some(b'}') | None => None,
            Some(_) => statement_end(b, i),
        }?;
        Some(splice_annotation(s, start, end, ASSERT_FALSE))
    })
}

fn add_default_return(s: &str) -> String {
    let b = s.as_bytes();
    let depths = brace_depths(b);
    let Some(c) = MAIN.captures_iter(s).find(|c| depths[c.get(0).unwrap().start()] == 0) else {
        return s.to_string();
    };
    if &c[1] == "void" {
        return s.to_string();
    }
    let m = c.get(0).unwrap();
    let Some(params_end) = matching(b, m.end() - 1) else {
        return s.to_string();
    };
    let Some(open) = s[params_end..].find(|ch: char| !ch.is_whitespace()).map(|p| params_end + p) else {
        return s.to_string();
    };
    if b[open] != b'{' {
        return s.to_string();
    }
    let Some(end) = matching(b, open) else {
        return s.to_string();
    };
    let close = end - 1;
    let inner = s[open + 1..close].trim_end();
    let last_line = inner.rsplit('\n').next().unwrap_or("");
    if ENDS_WITH_RETURN.is_match(last_line.trim()) {
        return s.to_string();
    }
    let indent = if inner.contains('\n') {
        let trimmed = last_line.trim_start();
        &last_line[..last_line.len() - trimmed.len()]
    } else {
        "    "
    };
    let indent = if indent.is_empty() { "    " } else { indent };
    format!("{}\n{indent}return 0;\n{}", &s[..open + 1 + inner.len()], &s[close..])
}

/// Trim trailing whitespace, collapse blank runs, keep the final newline
/// only when the input had one.
fn tidy(s: &str, final_newline: bool) -> String {
    let mut lines: Vec<&str> = Vec::new();
    for line in s.lines().map(str::trim_end) {
        if line.is_empty() && lines.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        lines.push(line);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let mut out = lines.join("\n");
    if final_newline && !out.is_empty() {
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_both_comment_forms() {
        assert_eq!(strip_comments("a /* b */ c // d\ne", false), "a   c \ne");
        assert_eq!(strip_comments("s = \"// no\";", false), "s = \"// no\";");
        assert_eq!(strip_comments("//@ assert x;\n/*@ y */", true), "//@ assert x;\n/*@ y */");
    }

    #[test]
    fn removes_harness_definitions_but_not_calls() {
        let src = "extern int __VERIFIER_nondet_int(void);\nvoid reach_error() { }\nint g = __VERIFIER_nondet_int();\n";
        let out = remove_harness(src);
        assert!(!out.contains("extern"));
        assert!(!out.contains("reach_error"));
        assert!(out.contains("int g = __VERIFIER_nondet_int();"));
    }

    #[test]
    fn adds_return_only_when_missing() {
        let out = normalize("int main() {\n  x = 1;\n}\n");
        assert_eq!(out, "int main() {\n  x = 1;\n  return 0;\n}\n");
        assert_eq!(normalize(&out), out);
        assert_eq!(normalize("void main() { }"), "void main() { }");
    }
}
