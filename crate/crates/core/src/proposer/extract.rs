//! Pulling `loop invariant e;` clauses out of model responses.

use std::sync::OnceLock;

use regex::Regex;

use crate::lang::CandidateSet;

fn invariant_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"loop\s+invariant\s+([^;]+);").expect("static regex"))
}

/// Body of the last fenced code block. A block left open at the end of the
/// response (a truncated completion) counts.
pub fn last_code_block(response: &str) -> Option<&str> {
    let mut last = None;
    let mut open: Option<usize> = None;
    let mut offset = 0;
    for line in response.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match open {
                None => open = Some(offset + line.len()),
                Some(start) => {
                    last = Some(&response[start..offset]);
                    open = None;
                }
            }
        }
        offset += line.len();
    }
    match open {
        Some(start) => Some(&response[start.min(response.len())..]),
        None => last,
    }
}

/// Split `a && b && c` at top level, unless a weaker operator also appears
/// at top level (then the text is not a conjunction of those parts).
pub fn split_conjunction(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut cuts = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            _ if depth == 0 => {
                let rest = &bytes[i..];
                if rest.starts_with(b"||") || rest.starts_with(b"==>") || rest.starts_with(b"<==>") || rest[0] == b'?' {
                    return vec![text.trim()];
                }
                if rest.starts_with(b"&&") {
                    cuts.push(i);
                    i += 2;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 || cuts.is_empty() {
        return vec![text.trim()];
    }
    let mut parts = Vec::new();
    let mut start = 0;
    for c in cuts {
        parts.push(text[start..c].trim());
        start = c + 2;
    }
    parts.push(text[start..].trim());
    if parts.iter().any(|p| p.is_empty()) {
        return vec![text.trim()];
    }
    parts
}

/// Candidates from the last code block, in order of appearance, with
/// top-level conjunctions split and duplicates dropped.
pub fn extract_invariants(response: &str) -> CandidateSet {
    let mut out = CandidateSet::new();
    let Some(block) = last_code_block(response) else { return out };
    for cap in invariant_re().captures_iter(block) {
        for part in split_conjunction(&cap[1]) {
            out.push_source(part);
        }
    }
    out
}

/// The response text a well-behaved model would give for these sources.
pub fn render_block(sources: &[&str]) -> String {
    let mut s = String::from("```\n/*@\n");
    for src in sources {
        s.push_str("    loop invariant ");
        s.push_str(src);
        s.push_str(";\n");
    }
    s.push_str("*/\n```\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_block_wins() {
        let r = "first\n```\nloop invariant a == 1;\n```\nthen\n```c\n/*@ loop invariant b >= 0; */\n```\n";
        assert_eq!(extract_invariants(r).sources(), ["b >= 0"]);
    }

    #[test]
    fn conjunctions_split_only_at_top() {
        assert_eq!(split_conjunction("x >= 0 && y >= 0"), ["x >= 0", "y >= 0"]);
        assert_eq!(split_conjunction("(a && b) || c"), ["(a && b) || c"]);
        assert_eq!(split_conjunction("a && b ==> c"), ["a && b ==> c"]);
        assert_eq!(split_conjunction("(a && b)"), ["(a && b)"]);
    }

    #[test]
    fn no_block_no_candidates() {
        assert!(extract_invariants("I think no invariants are needed").is_empty());
        assert!(extract_invariants("```\n```").is_empty());
    }

    #[test]
    fn truncated_block_counts() {
        assert_eq!(extract_invariants("```\nloop invariant x > 0;\nloop inv").sources(), ["x > 0"]);
    }
}
