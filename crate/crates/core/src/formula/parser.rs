//! Recursive-descent parser for the concrete formula syntax.
//!
//! Precedence, loosest first: `<->`, `->` (right associative), `|`, `U`,
//! `&`, then the prefix operators `!`, `X`, `F`, `G`. A quantifier's body
//! extends as far to the right as possible.

use super::{
    header_vars, Definition, DerivedKind, Formula, IterationSystem, Term, RESERVED_PREFIX,
};
use crate::error::{Error, Result};
use crate::structure::Signature;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Colon,
    Semi,
    Bang,
    Amp,
    Bar,
    Arrow,
    DArrow,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DArrow => "`<->`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            col += i - start;
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            if rest.starts_with("<->") {
                advance(3, &mut i, &mut col);
                Tok::DArrow
            } else if rest.starts_with("->") {
                advance(2, &mut i, &mut col);
                Tok::Arrow
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '!' => Tok::Bang,
                    '&' => Tok::Amp,
                    '|' => Tok::Bar,
                    '=' => Tok::Equals,
                    _ => {
                        return Err(Error::Syntax {
                            line,
                            col,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                };
                advance(1, &mut i, &mut col);
                t
            }
        };
        out.push(Spanned {
            tok,
            line: l0,
            col: c0,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 7] = ["exists", "forall", "iter", "X", "F", "G", "U"];

/// Parser configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions<'a> {
    /// Resolves constant names and enables arity / binding checks.
    pub signature: Option<&'a Signature>,
    /// Accept names with the reserved `__` prefix (generated formulas).
    pub allow_reserved: bool,
}

/// Parses a formula without a signature: every term name is a variable and
/// predicate symbols are not checked.
pub fn parse_formula(text: &str) -> Result<Formula> {
    ParseOptions::default().parse(text)
}

/// Parses a formula and checks it against `sig`.
pub fn parse_formula_with(text: &str, sig: &Signature) -> Result<Formula> {
    ParseOptions {
        signature: Some(sig),
        allow_reserved: false,
    }
    .parse(text)
}

impl<'a> ParseOptions<'a> {
    pub fn with_signature(sig: &'a Signature) -> Self {
        ParseOptions {
            signature: Some(sig),
            allow_reserved: false,
        }
    }

    pub fn allow_reserved(mut self, yes: bool) -> Self {
        self.allow_reserved = yes;
        self
    }

    pub fn parse(&self, text: &str) -> Result<Formula> {
        let mut p = Parser {
            toks: lex(text)?,
            pos: 0,
            opts: *self,
            header_depth: 0,
            bound: Vec::new(),
        };
        let f = p.formula()?;
        if p.peek() != &Tok::Eof {
            return p.err(format!("unexpected {}", p.peek().describe()));
        }
        if self.signature.is_some() {
            super::check_formula(&f, self.signature)?;
        }
        Ok(f)
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    opts: ParseOptions<'a>,
    header_depth: usize,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let s = &self.toks[self.pos];
        Err(Error::Syntax {
            line: s.line,
            col: s.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected {}, found {}",
                t.describe(),
                self.peek().describe()
            ))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn name(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if KEYWORDS.contains(&s.as_str()) {
                    return self.err(format!("keyword `{s}` cannot be used as a name"));
                }
                if s.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    return self.err(format!("`{s}` is not a valid name"));
                }
                if !self.opts.allow_reserved && s.starts_with(RESERVED_PREFIX) {
                    return self.err(format!(
                        "names starting with `{RESERVED_PREFIX}` are reserved"
                    ));
                }
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected a name, found {}", t.describe())),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut lhs = self.implies()?;
        while self.peek() == &Tok::DArrow {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.peek() == &Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.until()?;
        while self.peek() == &Tok::Bar {
            self.bump();
            let rhs = self.until()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.is_kw("U") {
            self.temporal_allowed("U")?;
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::until(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == &Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn temporal_allowed(&self, op: &str) -> Result<()> {
        if self.header_depth == 0 {
            let s = &self.toks[self.pos];
            return Err(Error::TemporalOutsideHeader {
                line: s.line,
                col: s.col,
                op: op.to_string(),
            });
        }
        Ok(())
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(s) if s == "X" || s == "F" || s == "G" => {
                self.temporal_allowed(&s)?;
                self.bump();
                let inner = self.unary()?;
                Ok(match s.as_str() {
                    "X" => Formula::next(inner),
                    "F" => Formula::eventually(inner),
                    _ => Formula::always(inner),
                })
            }
            Tok::Ident(s) if s == "exists" || s == "forall" => {
                self.bump();
                let v = self.name()?;
                self.expect(Tok::Dot)?;
                self.bound.push(v.clone());
                let body = self.formula();
                self.bound.pop();
                let body = body?;
                Ok(if s == "exists" {
                    Formula::exists(&v, body)
                } else {
                    Formula::forall(&v, body)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::LBrack => self.iteration(),
            Tok::Ident(s)
                if self.peek_at(1) == &Tok::LBrack && DerivedKind::from_keyword(&s).is_some() =>
            {
                self.bump();
                self.derived(DerivedKind::from_keyword(&s).unwrap())
            }
            Tok::Ident(_) => {
                if self.peek_at(1) == &Tok::LParen {
                    let pred = self.name()?;
                    let args = self.term_list()?;
                    Ok(Formula::Atom { pred, args })
                } else {
                    let a = self.term()?;
                    self.expect(Tok::Equals)?;
                    let b = self.term()?;
                    Ok(Formula::Eq(a, b))
                }
            }
            t => self.err(format!("expected a formula, found {}", t.describe())),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let n = self.name()?;
        let is_const =
            !self.bound.contains(&n) && self.opts.signature.is_some_and(|s| s.is_constant(&n));
        Ok(if is_const {
            Term::Const(n)
        } else {
            Term::Var(n)
        })
    }

    fn term_list(&mut self) -> Result<Vec<Term>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.peek() != &Tok::RParen {
            out.push(self.term()?);
            while self.peek() == &Tok::Comma {
                self.bump();
                out.push(self.term()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.peek() != &Tok::RParen {
            out.push(self.name()?);
            while self.peek() == &Tok::Comma {
                self.bump();
                out.push(self.name()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn definition(&mut self) -> Result<Definition> {
        let pred = self.name()?;
        let vars = self.var_list()?;
        self.expect(Tok::Colon)?;
        let depth = self.bound.len();
        self.bound.extend(vars.iter().cloned());
        let saved = std::mem::replace(&mut self.header_depth, 0);
        let body = self.formula();
        self.header_depth = saved;
        self.bound.truncate(depth);
        Ok(Definition {
            pred,
            vars,
            body: body?,
        })
    }

    fn system(&mut self) -> Result<IterationSystem> {
        let mut defs = vec![self.definition()?];
        while self.peek() == &Tok::Semi {
            self.bump();
            defs.push(self.definition()?);
        }
        for (i, d) in defs.iter().enumerate() {
            if defs[..i].iter().any(|e| e.pred == d.pred) {
                return self.err(format!("predicate variable `{}` defined twice", d.pred));
            }
        }
        Ok(IterationSystem { defs })
    }

    fn iteration(&mut self) -> Result<Formula> {
        self.expect(Tok::LBrack)?;
        // header variables are bound by the construct itself
        let saved_bound = std::mem::take(&mut self.bound);
        self.header_depth += 1;
        let header = self.formula();
        self.header_depth -= 1;
        self.bound = saved_bound;
        let header = header?;
        self.expect(Tok::RBrack)?;
        self.expect(Tok::LBrack)?;
        if !self.is_kw("iter") {
            return self.err(format!("expected `iter`, found {}", self.peek().describe()));
        }
        self.bump();
        let system = self.system()?;
        self.expect(Tok::RBrack)?;
        let args = self.term_list()?;
        let z = header_vars(&header);
        if z.len() != args.len() {
            return self.err(format!(
                "header has {} free variable(s) ({}) but {} argument(s) were given",
                z.len(),
                z.join(","),
                args.len()
            ));
        }
        Ok(Formula::iter(header, system, args))
    }

    fn derived(&mut self, kind: DerivedKind) -> Result<Formula> {
        self.expect(Tok::LBrack)?;
        let system = self.system()?;
        self.expect(Tok::RBrack)?;
        let args = self.term_list()?;
        if kind.single_only() && system.defs.len() != 1 {
            return self.err(format!("`{kind}` takes exactly one definition"));
        }
        if system.defs[0].arity() != args.len() {
            return self.err(format!(
                "`{}` has arity {} but {} argument(s) were given",
                system.defs[0].pred,
                system.defs[0].arity(),
                args.len()
            ));
        }
        Ok(Formula::derived(kind, system, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn tc_body() {
        let f = p("E(x,y) | exists z. (E(x,z) & R(z,y))");
        let expected = Formula::or(
            Formula::atom("E", &["x", "y"]),
            Formula::exists(
                "z",
                Formula::and(
                    Formula::atom("E", &["x", "z"]),
                    Formula::atom("R", &["z", "y"]),
                ),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn iteration_with_constant() {
        let mut sig = Signature::new();
        sig.add_constant("c").unwrap();
        let f = parse_formula_with("[F R(z)][iter R(x): !R(x)](c)", &sig).unwrap();
        let expected = Formula::iter(
            Formula::eventually(Formula::atom("R", &["z"])),
            IterationSystem::single("R", &["x"], Formula::not(Formula::atom("R", &["x"]))),
            vec![Term::constant("c")],
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn temporal_outside_header() {
        let err = parse_formula("F R(z) & E(x,y)").unwrap_err();
        assert!(
            matches!(
                err,
                Error::TemporalOutsideHeader {
                    line: 1,
                    col: 1,
                    ..
                }
            ),
            "{err:?}"
        );
        let err = parse_formula("[F R(z)][iter R(x): X R(x)](y)").unwrap_err();
        assert!(matches!(err, Error::TemporalOutsideHeader { .. }));
    }

    #[test]
    fn nested_header_inside_body_is_fine() {
        p("[F R(z)][iter R(x): [G S(w)][iter S(y): R(y)](x)](a)");
    }

    #[test]
    fn precedence() {
        assert_eq!(
            p("A() & B() | C()"),
            Formula::or(
                Formula::and(Formula::atom("A", &[]), Formula::atom("B", &[])),
                Formula::atom("C", &[])
            )
        );
        assert_eq!(
            p("A() -> B() -> C()"),
            Formula::implies(
                Formula::atom("A", &[]),
                Formula::implies(Formula::atom("B", &[]), Formula::atom("C", &[]))
            )
        );
        assert_eq!(
            p("!A() & B()"),
            Formula::and(
                Formula::not(Formula::atom("A", &[])),
                Formula::atom("B", &[])
            )
        );
        assert_eq!(
            p("exists x. A(x) | B(x)"),
            Formula::exists(
                "x",
                Formula::or(Formula::atom("A", &["x"]), Formula::atom("B", &["x"]))
            )
        );
        let h = p("[A(z) U B(z) & C(z) | D(z)][iter A(x): B(x)](y)");
        match h {
            Formula::Iter { header, .. } => assert_eq!(
                *header,
                Formula::or(
                    Formula::until(
                        Formula::atom("A", &["z"]),
                        Formula::and(Formula::atom("B", &["z"]), Formula::atom("C", &["z"]))
                    ),
                    Formula::atom("D", &["z"])
                )
            ),
            _ => panic!(),
        }
    }

    #[test]
    fn errors_have_positions() {
        match parse_formula("E(x,\n  y").unwrap_err() {
            Error::Syntax { line, col, .. } => assert_eq!((line, col), (2, 4)),
            e => panic!("{e:?}"),
        }
        assert!(parse_formula("__R(x)").is_err());
        assert!(ParseOptions::default()
            .allow_reserved(true)
            .parse("__R(x)")
            .is_ok());
        assert!(parse_formula("lfp[R(x): R(x)](a, b)").is_err());
        assert!(parse_formula("[F R(z)][iter R(x): R(x)]()").is_err());
        assert!(parse_formula("id[P(x): P(x); Q(x): Q(x)](a)").is_err());
    }

    #[test]
    fn derived_kinds() {
        for k in DerivedKind::ALL {
            let f = p(&format!("{}[R(x): R(x)](a)", k.keyword()));
            assert!(matches!(f, Formula::Derived { kind, .. } if kind == k));
        }
    }

    #[test]
    fn equality_and_nullary() {
        assert_eq!(p("x = y"), Formula::eq(Term::var("x"), Term::var("y")));
        assert_eq!(p("T()"), Formula::atom("T", &[]));
    }
}
