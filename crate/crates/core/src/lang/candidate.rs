use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::Expr;
use super::parser::parse_expr;
use super::printer::print_expr;

/// One candidate loop invariant: the text a proposer produced and, when it
/// parses, the expression it denotes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "CandidateRepr", into = "CandidateRepr")]
pub struct CandidateInvariant {
    pub id: usize,
    pub source: String,
    pub expr: Option<Expr>,
    pub parse_error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CandidateRepr {
    id: usize,
    source: String,
}

impl From<CandidateRepr> for CandidateInvariant {
    fn from(r: CandidateRepr) -> Self {
        CandidateInvariant::new(r.id, &r.source)
    }
}

impl From<CandidateInvariant> for CandidateRepr {
    fn from(c: CandidateInvariant) -> Self {
        CandidateRepr { id: c.id, source: c.source }
    }
}

impl CandidateInvariant {
    pub fn new(id: usize, source: &str) -> Self {
        let source = source.trim().to_string();
        let (expr, parse_error) = match parse_expr(&source) {
            Ok(e) => (Some(e), None),
            Err(err) => (None, Some(err.to_string())),
        };
        CandidateInvariant { id, source, expr, parse_error }
    }

    /// A candidate for an expression built in code; its source is the
    /// printed expression.
    pub fn from_expr(id: usize, expr: Expr) -> Self {
        CandidateInvariant { id, source: print_expr(&expr), expr: Some(expr), parse_error: None }
    }

    pub fn is_parsed(&self) -> bool {
        self.expr.is_some()
    }

    /// Identity for set membership: the printed expression, or the source
    /// with whitespace collapsed when it does not parse.
    pub fn key(&self) -> String {
        match &self.expr {
            Some(e) => print_expr(e),
            None => self.source.split_whitespace().collect::<Vec<_>>().join(" "),
        }
    }
}

impl PartialEq for CandidateInvariant {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for CandidateInvariant {}

/// Ordered set of candidates, deduplicated by [`CandidateInvariant::key`].
/// Ids are assigned on insertion and survive removals.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "Vec<CandidateInvariant>", into = "Vec<CandidateInvariant>")]
pub struct CandidateSet {
    items: Vec<CandidateInvariant>,
    keys: BTreeSet<String>,
    next_id: usize,
}

impl From<Vec<CandidateInvariant>> for CandidateSet {
    fn from(items: Vec<CandidateInvariant>) -> Self {
        let mut set = CandidateSet::new();
        for c in items {
            set.next_id = set.next_id.max(c.id);
            set.insert_with_id(c);
        }
        set
    }
}

impl From<CandidateSet> for Vec<CandidateInvariant> {
    fn from(s: CandidateSet) -> Self {
        s.items
    }
}

impl PartialEq for CandidateSet {
    fn eq(&self, other: &Self) -> bool {
        self.items.len() == other.items.len() && self.items.iter().zip(&other.items).all(|(a, b)| a == b)
    }
}

impl Eq for CandidateSet {}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set = CandidateSet::new();
        for s in sources {
            set.push_source(s);
        }
        set
    }

    pub fn from_exprs(exprs: impl IntoIterator<Item = Expr>) -> Self {
        let mut set = CandidateSet::new();
        for e in exprs {
            set.insert(CandidateInvariant::from_expr(0, e));
        }
        set
    }

    /// Parse and add a source text; returns false for a duplicate or blank.
    pub fn push_source(&mut self, source: &str) -> bool {
        if source.trim().is_empty() {
            return false;
        }
        self.insert(CandidateInvariant::new(0, source))
    }

    /// Add a candidate under a fresh id; returns false if its key is present.
    pub fn insert(&mut self, mut c: CandidateInvariant) -> bool {
        c.id = self.next_id;
        self.insert_with_id(c)
    }

    fn insert_with_id(&mut self, c: CandidateInvariant) -> bool {
        if !self.keys.insert(c.key()) {
            return false;
        }
        self.next_id = self.next_id.max(c.id + 1);
        self.items.push(c);
        true
    }

    pub fn extend_from(&mut self, other: &CandidateSet) {
        for c in other.iter() {
            self.insert(c.clone());
        }
    }

    pub fn union<'a>(sets: impl IntoIterator<Item = &'a CandidateSet>) -> CandidateSet {
        let mut out = CandidateSet::new();
        for s in sets {
            out.extend_from(s);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CandidateInvariant> {
        self.items.iter()
    }

    pub fn get(&self, id: usize) -> Option<&CandidateInvariant> {
        self.items.iter().find(|c| c.id == id)
    }

    pub fn contains(&self, c: &CandidateInvariant) -> bool {
        self.keys.contains(&c.key())
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.keys.contains(key)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.items.iter().map(|c| c.id).collect()
    }

    pub fn sources(&self) -> Vec<&str> {
        self.items.iter().map(|c| c.source.as_str()).collect()
    }

    pub fn keys(&self) -> Vec<String> {
        self.items.iter().map(|c| c.key()).collect()
    }

    /// Parsed expressions, skipping unparsed candidates.
    pub fn exprs(&self) -> Vec<&Expr> {
        self.items.iter().filter_map(|c| c.expr.as_ref()).collect()
    }

    pub fn remove_ids(&mut self, ids: &BTreeSet<usize>) {
        self.retain(|c| !ids.contains(&c.id));
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&CandidateInvariant) -> bool) {
        let mut removed = Vec::new();
        self.items.retain(|c| {
            let k = keep(c);
            if !k {
                removed.push(c.key());
            }
            k
        });
        for k in removed {
            self.keys.remove(&k);
        }
    }

    /// Subset of this set with the given ids, in set order.
    pub fn subset(&self, ids: &BTreeSet<usize>) -> CandidateSet {
        let mut out = self.clone();
        out.retain(|c| ids.contains(&c.id));
        out
    }

    pub fn is_subset_of(&self, other: &CandidateSet) -> bool {
        self.keys.is_subset(&other.keys)
    }
}

impl<'a> IntoIterator for &'a CandidateSet {
    type Item = &'a CandidateInvariant;
    type IntoIter = std::slice::Iter<'a, CandidateInvariant>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_by_normalized_expression() {
        let set = CandidateSet::from_sources(["x+y==n", "(x + y) == n", "x >= 0"]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.sources(), vec!["x+y==n", "x >= 0"]);
    }

    #[test]
    fn unparsed_kept_as_source() {
        let c = CandidateInvariant::new(0, "\\at(x, Pre) == 0");
        assert!(c.expr.is_none());
        assert_eq!(c.source, "\\at(x, Pre) == 0");
    }

    #[test]
    fn ids_survive_removal() {
        let mut set = CandidateSet::from_sources(["a > 0", "b > 0", "c > 0"]);
        set.remove_ids(&BTreeSet::from([1]));
        assert_eq!(set.ids(), vec![0, 2]);
        assert!(set.insert(CandidateInvariant::new(0, "b > 0")));
        assert_eq!(set.ids(), vec![0, 2, 3]);
    }

    #[test]
    fn serde_round_trip() {
        let set = CandidateSet::from_sources(["x >= 0", "x ++ y"]);
        let json = serde_json::to_string(&set).unwrap();
        let back: CandidateSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.ids(), set.ids());
    }
}
