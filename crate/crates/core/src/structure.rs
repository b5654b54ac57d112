//! Finite relational structures and their text format.
//!
//! Elements of a structure with domain size `n` are the integers `0..n`.
//! The file format is line oriented:
//!
//! ```text
//! domain 3
//! const a = 0
//! rel E/2 = { (0,1) (1,2) }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

pub type Element = usize;
pub type Tuple = Vec<Element>;

/// A finite set of tuples of a fixed arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    /// Every tuple of `M^arity` for a domain of size `n`.
    pub fn full(arity: usize, n: usize) -> Self {
        Relation {
            arity,
            tuples: all_tuples(n, arity).collect(),
        }
    }

    /// Builds a relation, checking that every tuple has length `arity`.
    pub fn from_tuples<I>(arity: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Tuple>,
    {
        let mut rel = Relation::empty(arity);
        for t in tuples {
            if t.len() != arity {
                return Err(Error::ArityMismatch {
                    name: "<tuple>".into(),
                    expected: arity,
                    found: t.len(),
                });
            }
            rel.tuples.insert(t);
        }
        Ok(rel)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Element]) -> bool {
        self.tuples.contains(t)
    }

    /// Inserts a tuple. Panics if the tuple has the wrong length.
    pub fn insert(&mut self, t: Tuple) -> bool {
        assert_eq!(t.len(), self.arity, "tuple arity");
        self.tuples.insert(t)
    }

    /// Tuples in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    pub fn union(&self, other: &Relation) -> Relation {
        debug_assert_eq!(self.arity, other.arity);
        Relation {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        debug_assert_eq!(self.arity, other.arity);
        Relation {
            arity: self.arity,
            tuples: self.tuples.intersection(&other.tuples).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Relation) -> Relation {
        debug_assert_eq!(self.arity, other.arity);
        Relation {
            arity: self.arity,
            tuples: self.tuples.difference(&other.tuples).cloned().collect(),
        }
    }

    /// Complement with respect to `M^arity`.
    pub fn complement(&self, n: usize) -> Relation {
        Relation::full(self.arity, n).difference(self)
    }

    /// Largest element mentioned, if any.
    fn max_element(&self) -> Option<Element> {
        self.tuples.iter().flat_map(|t| t.iter().copied()).max()
    }

    /// Collects tuples of a known arity; panics on a tuple of another length.
    pub fn collect_arity(arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Self {
        let mut r = Relation::empty(arity);
        for t in tuples {
            r.insert(t);
        }
        r
    }

    /// `{ (0,1) (1,2) }` form used by the structure file.
    pub fn to_block(&self) -> String {
        if self.tuples.is_empty() {
            return "{ }".to_string();
        }
        let body: Vec<String> = self.tuples.iter().map(|t| format_tuple(t)).collect();
        format!("{{ {} }}", body.join(" "))
    }
}

impl FromIterator<Tuple> for Relation {
    /// Collects tuples; the arity is taken from the first tuple (0 when empty).
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Self {
        let tuples: BTreeSet<Tuple> = iter.into_iter().collect();
        let arity = tuples.iter().next().map_or(0, Vec::len);
        assert!(tuples.iter().all(|t| t.len() == arity), "mixed arities");
        Relation { arity, tuples }
    }
}

pub fn format_tuple(t: &[Element]) -> String {
    let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Iterates over `{0..n}^k` in lexicographic order. Yields exactly one empty
/// tuple when `k == 0`.
pub fn all_tuples(n: usize, k: usize) -> AllTuples {
    AllTuples {
        n,
        next: if k > 0 && n == 0 {
            None
        } else {
            Some(vec![0; k])
        },
    }
}

pub struct AllTuples {
    n: usize,
    next: Option<Tuple>,
}

impl Iterator for AllTuples {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.n {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// Relation and constant symbols of a structure, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    constants: Vec<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<()> {
        if self.has_symbol(name) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        self.relations.push((name.to_string(), arity));
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<()> {
        if self.has_symbol(name) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        self.constants.push(name.to_string());
        Ok(())
    }

    pub fn has_symbol(&self, name: &str) -> bool {
        self.relation_arity(name).is_some() || self.is_constant(name)
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }
}

/// A finite domain `{0..n}` with interpretations for every signature symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    domain_size: usize,
    signature: Signature,
    relations: BTreeMap<String, Relation>,
    constants: BTreeMap<String, Element>,
}

impl FiniteStructure {
    pub fn new(domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::StructureSyntax {
                line: 0,
                message: "domain must be non-empty".into(),
            });
        }
        Ok(FiniteStructure {
            domain_size,
            signature: Signature::new(),
            relations: BTreeMap::new(),
            constants: BTreeMap::new(),
        })
    }

    pub fn with_relation(mut self, name: &str, rel: Relation) -> Result<Self> {
        self.add_relation(name, rel)?;
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str, value: Element) -> Result<Self> {
        self.add_constant(name, value)?;
        Ok(self)
    }

    pub fn add_relation(&mut self, name: &str, rel: Relation) -> Result<()> {
        if let Some(e) = rel.max_element().filter(|&e| e >= self.domain_size) {
            return Err(Error::ElementOutOfRange {
                line: 0,
                element: e,
                domain: self.domain_size,
            });
        }
        self.signature.add_relation(name, rel.arity())?;
        self.relations.insert(name.to_string(), rel);
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str, value: Element) -> Result<()> {
        if value >= self.domain_size {
            return Err(Error::ElementOutOfRange {
                line: 0,
                element: value,
                domain: self.domain_size,
            });
        }
        self.signature.add_constant(name)?;
        self.constants.insert(name.to_string(), value);
        Ok(())
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn constant(&self, name: &str) -> Option<Element> {
        self.constants.get(name).copied()
    }

    /// Parses the structure-file format.
    pub fn parse(text: &str) -> Result<Self> {
        parse_structure(text)
    }
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {}", self.domain_size)?;
        for c in self.signature.constants() {
            writeln!(f, "const {} = {}", c, self.constants[c])?;
        }
        for (r, arity) in self.signature.relations() {
            writeln!(f, "rel {}/{} = {}", r, arity, self.relations[r].to_block())?;
        }
        Ok(())
    }
}

/// Renders a structure in the file format accepted by [`parse_structure`].
pub fn print_structure(s: &FiniteStructure) -> String {
    s.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Num(usize),
    Punct(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut chars = content.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c.is_ascii_digit() {
                let mut end = start;
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    end = i + d.len_utf8();
                    chars.next();
                }
                let value = content[start..end]
                    .parse()
                    .map_err(|_| Error::StructureSyntax {
                        line,
                        message: format!("number `{}` too large", &content[start..end]),
                    })?;
                out.push((Tok::Num(value), line));
            } else if c.is_alphabetic() || c == '_' {
                let mut end = start;
                while let Some(&(i, d)) = chars.peek() {
                    if !(d.is_alphanumeric() || d == '_' || d == '\'') {
                        break;
                    }
                    end = i + d.len_utf8();
                    chars.next();
                }
                out.push((Tok::Word(content[start..end].to_string()), line));
            } else if "=/{}(),".contains(c) {
                out.push((Tok::Punct(c), line));
                chars.next();
            } else {
                return Err(Error::StructureSyntax {
                    line,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

struct StructParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl StructParser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::StructureSyntax {
            line: self.line(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn punct(&mut self, c: char) -> Result<()> {
        match self.next() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => {
                self.pos -= 1;
                self.err(format!(
                    "expected `{c}`, found {}",
                    describe(other.as_ref())
                ))
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(n),
            other => {
                self.pos -= 1;
                self.err(format!(
                    "expected a number, found {}",
                    describe(other.as_ref())
                ))
            }
        }
    }

    fn word(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w),
            other => {
                self.pos -= 1;
                self.err(format!(
                    "expected a name, found {}",
                    describe(other.as_ref())
                ))
            }
        }
    }
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".into(),
        Some(Tok::Word(w)) => format!("`{w}`"),
        Some(Tok::Num(n)) => format!("`{n}`"),
        Some(Tok::Punct(c)) => format!("`{c}`"),
    }
}

/// Parses and validates a structure file.
pub fn parse_structure(text: &str) -> Result<FiniteStructure> {
    let mut p = StructParser {
        toks: tokenize(text)?,
        pos: 0,
    };
    match p.next() {
        Some(Tok::Word(w)) if w == "domain" => {}
        _ => {
            p.pos = 0;
            return p.err("expected `domain N` as the first declaration");
        }
    }
    let n = p.number()?;
    let mut s = FiniteStructure::new(n).map_err(|_| Error::StructureSyntax {
        line: 1,
        message: "domain must be non-empty".into(),
    })?;
    while let Some(tok) = p.peek().cloned() {
        let line = p.line();
        match tok {
            Tok::Word(w) if w == "const" => {
                p.pos += 1;
                let name = p.word()?;
                p.punct('=')?;
                let e = p.number()?;
                if e >= n {
                    return Err(Error::ElementOutOfRange {
                        line,
                        element: e,
                        domain: n,
                    });
                }
                s.add_constant(&name, e)?;
            }
            Tok::Word(w) if w == "rel" => {
                p.pos += 1;
                let name = p.word()?;
                p.punct('/')?;
                let arity = p.number()?;
                p.punct('=')?;
                p.punct('{')?;
                let mut rel = Relation::empty(arity);
                while p.peek() != Some(&Tok::Punct('}')) {
                    let tline = p.line();
                    p.punct('(')?;
                    let mut t = Vec::new();
                    if p.peek() != Some(&Tok::Punct(')')) {
                        t.push(p.number()?);
                        while p.peek() == Some(&Tok::Punct(',')) {
                            p.pos += 1;
                            t.push(p.number()?);
                        }
                    }
                    p.punct(')')?;
                    if t.len() != arity {
                        return Err(Error::ArityMismatch {
                            name: name.clone(),
                            expected: arity,
                            found: t.len(),
                        });
                    }
                    if let Some(&e) = t.iter().find(|&&e| e >= n) {
                        return Err(Error::ElementOutOfRange {
                            line: tline,
                            element: e,
                            domain: n,
                        });
                    }
                    rel.insert(t);
                }
                p.punct('}')?;
                s.add_relation(&name, rel)?;
            }
            other => {
                return p.err(format!(
                    "expected `const` or `rel`, found {}",
                    describe(Some(&other))
                ))
            }
        }
    }
    Ok(s)
}

/// Values for individual variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<String, Element>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, value: Element) -> Self {
        self.bindings.insert(var.to_string(), value);
        self
    }

    pub fn set(&mut self, var: &str, value: Element) {
        self.bindings.insert(var.to_string(), value);
    }

    pub fn get(&self, var: &str) -> Option<Element> {
        self.bindings.get(var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Element)> {
        self.bindings.iter()
    }
}

impl<S: Into<String>> FromIterator<(S, Element)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (S, Element)>>(iter: I) -> Self {
        Assignment {
            bindings: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path() {
        let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
        assert_eq!(s.domain_size(), 3);
        let e = s.relation("E").unwrap();
        assert_eq!(
            e,
            &Relation::from_tuples(2, vec![vec![1, 2], vec![0, 1]]).unwrap()
        );
    }

    #[test]
    fn empty_relation() {
        let s = parse_structure("domain 1\nrel P/1 = { }").unwrap();
        assert!(s.relation("P").unwrap().is_empty());
        assert!(s.to_string().contains("rel P/1 = { }"));
    }

    #[test]
    fn out_of_range() {
        let err = parse_structure("domain 2\nrel E/2 = { (0,5) }").unwrap_err();
        assert_eq!(
            err,
            Error::ElementOutOfRange {
                line: 2,
                element: 5,
                domain: 2
            }
        );
    }

    #[test]
    fn constant_round_trip() {
        let s = parse_structure("domain 2\nconst a = 0\n").unwrap();
        let text = print_structure(&s);
        assert!(text.contains("const a = 0"));
        assert_eq!(parse_structure(&text).unwrap(), s);
    }

    #[test]
    fn path_round_trip() {
        let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
        assert_eq!(parse_structure(&print_structure(&s)).unwrap(), s);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_structure("domain 0"),
            Err(Error::StructureSyntax { .. })
        ));
        assert!(matches!(
            parse_structure("rel E/2 = { }"),
            Err(Error::StructureSyntax { line: 1, .. })
        ));
        assert_eq!(
            parse_structure("domain 2\nrel E/1 = { }\nconst E = 1"),
            Err(Error::DuplicateSymbol("E".into()))
        );
        assert!(matches!(
            parse_structure("domain 2\nrel E/2 = { (0) }"),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_structure("domain 2\nconst c = 2"),
            Err(Error::ElementOutOfRange { .. })
        ));
        assert!(matches!(
            parse_structure("domain 2\nrel E/2 = { (0,1) "),
            Err(Error::StructureSyntax { .. })
        ));
    }

    #[test]
    fn nullary_relations() {
        let s = parse_structure("domain 1\nrel T/0 = { () }\nrel F/0 = { }").unwrap();
        assert!(s.relation("T").unwrap().contains(&[]));
        assert!(s.relation("F").unwrap().is_empty());
        assert_eq!(parse_structure(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn multiline_blocks_and_comments() {
        let s = parse_structure("# graph\ndomain 3 # size\nrel E/2 = {\n (0,1)\n (1,2) (1,2)\n}\n")
            .unwrap();
        assert_eq!(s.relation("E").unwrap().len(), 2);
    }

    #[test]
    fn validation_is_exhaustive_for_small_arities() {
        let n = 2;
        for k in 0..=3 {
            for bad_pos in 0..k {
                let mut t = vec![0; k];
                t[bad_pos] = n;
                let text = format!("domain {n}\nrel R/{k} = {{ {} }}", format_tuple(&t));
                assert!(matches!(
                    parse_structure(&text),
                    Err(Error::ElementOutOfRange { element: 2, .. })
                ));
            }
            for t in all_tuples(n, k) {
                let text = format!("domain {n}\nrel R/{k} = {{ {} }}", format_tuple(&t));
                assert!(parse_structure(&text).is_ok(), "{text}");
            }
        }
    }

    #[test]
    fn all_tuples_counts() {
        assert_eq!(all_tuples(3, 0).count(), 1);
        assert_eq!(all_tuples(3, 2).count(), 9);
        assert_eq!(all_tuples(1, 3).collect::<Vec<_>>(), vec![vec![0, 0, 0]]);
        let v: Vec<_> = all_tuples(2, 2).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn relation_equality_ignores_order() {
        let a = Relation::from_tuples(1, vec![vec![0], vec![2], vec![1]]).unwrap();
        let b = Relation::from_tuples(1, vec![vec![1], vec![0], vec![2], vec![0]]).unwrap();
        assert_eq!(a, b);
    }
}
