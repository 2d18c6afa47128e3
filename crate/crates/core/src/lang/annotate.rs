use super::ast::Program;
use super::candidate::CandidateSet;

/// Render `A(P, I)`: the program's source with a loop annotation block in
/// front of the loop holding one `loop invariant` line per candidate. An
/// existing block on the loop is replaced.
pub fn annotate(program: &Program, candidates: &CandidateSet) -> String {
    let src = &program.source_text;
    let line_start = program.loop_line_offset;
    let line_end = src[line_start..].find('\n').map_or(src.len(), |i| line_start + i);
    let line = &src[line_start..line_end];
    let indent: String = line.chars().take_while(|c| *c == ' ' || *c == '\t').collect();

    let mut block = format!("{indent}/*@\n");
    for c in candidates {
        block.push_str(&format!("{indent}    loop invariant {};\n", c.source));
    }
    block.push_str(&format!("{indent}*/\n"));

    let (start, end) = match program.annotation_span {
        Some(span) => span,
        None => {
            let keyword_col = program.loop_location.column as usize - 1;
            let prefix_len = line.char_indices().nth(keyword_col).map_or(0, |(i, _)| i);
            let prefix = &line[..prefix_len];
            if prefix.trim().is_empty() {
                (line_start, line_start)
            } else {
                // the loop shares its line with earlier code; break the line
                let at = line_start + prefix.len();
                let mut out = String::with_capacity(src.len() + block.len() + 1);
                out.push_str(&src[..at]);
                out.push('\n');
                out.push_str(&block);
                out.push_str(&indent);
                out.push_str(&src[at..]);
                return out;
            }
        }
    };
    let mut out = String::with_capacity(src.len() + block.len());
    out.push_str(&src[..start]);
    out.push_str(&block);
    out.push_str(&src[end..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_annotated;

    const PROG: &str = "int main() {\n    int n = unknown_int();\n    int x = n, y = 0;\n    assume(n >= 0);\n    while (x > 0) {\n        x--;\n        y++;\n    }\n    //@ assert y == n;\n    return 0;\n}\n";

    #[test]
    fn inserts_block_before_loop() {
        let p = parse_annotated(PROG).unwrap().program;
        let set = CandidateSet::from_sources(["x + y == n", "x >= 0"]);
        let text = annotate(&p, &set);
        assert!(text.contains(
            "    /*@\n        loop invariant x + y == n;\n        loop invariant x >= 0;\n    */\n    while (x > 0)"
        ));
        let back = parse_annotated(&text).unwrap();
        assert!(back.program.same_structure(&p));
        assert_eq!(back.candidates.sources(), set.sources());
    }

    #[test]
    fn replaces_existing_block() {
        let p = parse_annotated(PROG).unwrap().program;
        let once = annotate(&p, &CandidateSet::from_sources(["x >= 0"]));
        let p1 = parse_annotated(&once).unwrap().program;
        let twice = annotate(&p1, &CandidateSet::from_sources(["y >= 0"]));
        assert!(!twice.contains("x >= 0;"));
        assert_eq!(parse_annotated(&twice).unwrap().candidates.sources(), vec!["y >= 0"]);
    }

    #[test]
    fn empty_set_gives_empty_block() {
        let p = parse_annotated(PROG).unwrap().program;
        let text = annotate(&p, &CandidateSet::new());
        assert!(text.contains("    /*@\n    */\n    while"));
        assert!(parse_annotated(&text).unwrap().candidates.is_empty());
    }

    #[test]
    fn loop_sharing_a_line() {
        let src = "int main() { int x = 0; while (x < 3) x++; return 0; }";
        let p = parse_annotated(src).unwrap().program;
        let text = annotate(&p, &CandidateSet::from_sources(["x <= 3"]));
        let back = parse_annotated(&text).unwrap();
        assert!(back.program.same_structure(&p));
        assert_eq!(back.candidates.sources(), vec!["x <= 3"]);
    }
}
