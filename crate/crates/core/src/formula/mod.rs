//! Formula syntax: terms, first-order and temporal connectives, the iteration
//! construct and the derived fixpoint operators.

mod analysis;
mod parser;
mod printer;

pub(crate) use analysis::map_children;
pub use analysis::{
    check_formula, free_predicates, free_variables, free_vars_ordered, header_vars, is_temporal,
    mentions_pred, polarity, rename_bound_apart, replace_pred, subst_vars, system_params,
    FreshNames, Polarity,
};
pub use parser::{parse_formula, parse_formula_with, ParseOptions};
pub use printer::print_formula;

use std::fmt;

/// Names starting with this prefix are reserved for generated symbols.
pub const RESERVED_PREFIX: &str = "__";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

/// `pred(vars) <- body`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    pub pred: String,
    pub vars: Vec<String>,
    pub body: Formula,
}

impl Definition {
    pub fn new(pred: &str, vars: &[&str], body: Formula) -> Self {
        Definition {
            pred: pred.to_string(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
            body,
        }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }
}

/// A non-empty list of simultaneous definitions with distinct predicate names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IterationSystem {
    pub defs: Vec<Definition>,
}

impl IterationSystem {
    pub fn new(defs: Vec<Definition>) -> Self {
        IterationSystem { defs }
    }

    pub fn single(pred: &str, vars: &[&str], body: Formula) -> Self {
        IterationSystem {
            defs: vec![Definition::new(pred, vars, body)],
        }
    }

    pub fn single_owned(pred: &str, vars: &[String], body: Formula) -> Self {
        IterationSystem {
            defs: vec![Definition {
                pred: pred.to_string(),
                vars: vars.to_vec(),
                body,
            }],
        }
    }

    pub fn def(&self, pred: &str) -> Option<&Definition> {
        self.defs.iter().find(|d| d.pred == pred)
    }

    pub fn binds(&self, pred: &str) -> bool {
        self.def(pred).is_some()
    }

    pub fn preds(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.pred.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivedKind {
    Lfp,
    Ifp,
    Pfp,
    PfpGen,
    PfpCup,
    PfpCap,
    Rfp,
    OpMu,
    OpNu,
    Id,
}

impl DerivedKind {
    pub const ALL: [DerivedKind; 10] = [
        DerivedKind::Lfp,
        DerivedKind::Ifp,
        DerivedKind::Pfp,
        DerivedKind::PfpGen,
        DerivedKind::PfpCup,
        DerivedKind::PfpCap,
        DerivedKind::Rfp,
        DerivedKind::OpMu,
        DerivedKind::OpNu,
        DerivedKind::Id,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            DerivedKind::Lfp => "lfp",
            DerivedKind::Ifp => "ifp",
            DerivedKind::Pfp => "pfp",
            DerivedKind::PfpGen => "pfpgen",
            DerivedKind::PfpCup => "pfpcup",
            DerivedKind::PfpCap => "pfpcap",
            DerivedKind::Rfp => "rfp",
            DerivedKind::OpMu => "opmu",
            DerivedKind::OpNu => "opnu",
            DerivedKind::Id => "id",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Kinds that accept only a single definition.
    pub fn single_only(self) -> bool {
        matches!(
            self,
            DerivedKind::OpMu | DerivedKind::OpNu | DerivedKind::Id
        )
    }
}

impl fmt::Display for DerivedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Formula AST.
///
/// Temporal connectives are legal only inside the header of an [`Formula::Iter`].
/// The header's free variables, in order of first occurrence, are the
/// construct's result columns and are matched positionally against `args`.
/// A [`Formula::Derived`] selects the first definition of its system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom {
        pred: String,
        args: Vec<Term>,
    },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Iter {
        header: Box<Formula>,
        system: IterationSystem,
        args: Vec<Term>,
    },
    Derived {
        kind: DerivedKind,
        system: IterationSystem,
        args: Vec<Term>,
    },
}

impl Formula {
    pub fn atom(pred: &str, vars: &[&str]) -> Formula {
        Formula::Atom {
            pred: pred.to_string(),
            args: vars.iter().map(|v| Term::var(v)).collect(),
        }
    }

    pub fn atom_terms(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom {
            pred: pred.to_string(),
            args,
        }
    }

    pub fn atom_vars(pred: &str, vars: &[String]) -> Formula {
        Formula::Atom {
            pred: pred.to_string(),
            args: vars.iter().map(|v| Term::Var(v.clone())).collect(),
        }
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists(v: &str, f: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(f))
    }

    pub fn forall(v: &str, f: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(f))
    }

    /// `exists v1. ... exists vk. f`
    pub fn exists_all(vars: &[String], f: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(f, |acc, v| Formula::Exists(v.clone(), Box::new(acc)))
    }

    /// `forall v1. ... forall vk. f`
    pub fn forall_all(vars: &[String], f: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(f, |acc, v| Formula::Forall(v.clone(), Box::new(acc)))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn iter(header: Formula, system: IterationSystem, args: Vec<Term>) -> Formula {
        Formula::Iter {
            header: Box::new(header),
            system,
            args,
        }
    }

    pub fn derived(kind: DerivedKind, system: IterationSystem, args: Vec<Term>) -> Formula {
        Formula::Derived { kind, system, args }
    }

    /// The closed formula `exists v. !(v = v)`.
    pub fn falsum() -> Formula {
        let v = format!("{RESERVED_PREFIX}f");
        Formula::exists(
            &v,
            Formula::not(Formula::eq(Term::Var(v.clone()), Term::Var(v.clone()))),
        )
    }

    /// The closed formula `!exists v. !(v = v)`.
    pub fn verum() -> Formula {
        Formula::not(Formula::falsum())
    }

    /// Conjunction of a list; `verum` when empty.
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::verum(),
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of a list; `falsum` when empty.
    pub fn disj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::falsum(),
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Immediate subformulas in the same scope (excludes system bodies and
    /// headers of nested constructs).
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom { .. }
            | Formula::Eq(..)
            | Formula::Iter { .. }
            | Formula::Derived { .. } => {
                vec![]
            }
            Formula::Not(a)
            | Formula::Exists(_, a)
            | Formula::Forall(_, a)
            | Formula::Next(a)
            | Formula::Eventually(a)
            | Formula::Always(a) => vec![a],
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b)
            | Formula::Until(a, b) => vec![a, b],
        }
    }

    /// Number of AST nodes, including nested systems and headers.
    pub fn size(&self) -> usize {
        match self {
            Formula::Iter { header, system, .. } => {
                1 + header.size() + system.defs.iter().map(|d| d.body.size()).sum::<usize>()
            }
            Formula::Derived { system, .. } => {
                1 + system.defs.iter().map(|d| d.body.size()).sum::<usize>()
            }
            _ => {
                1 + self
                    .children()
                    .into_iter()
                    .map(Formula::size)
                    .sum::<usize>()
            }
        }
    }

    /// True if the formula contains a derived fixpoint node anywhere.
    pub fn has_derived(&self) -> bool {
        match self {
            Formula::Derived { .. } => true,
            Formula::Iter { header, system, .. } => {
                header.has_derived() || system.defs.iter().any(|d| d.body.has_derived())
            }
            _ => self.children().into_iter().any(Formula::has_derived),
        }
    }

    /// True if the formula contains an iteration node anywhere.
    pub fn has_iter(&self) -> bool {
        match self {
            Formula::Iter { .. } => true,
            Formula::Derived { system, .. } => system.defs.iter().any(|d| d.body.has_iter()),
            _ => self.children().into_iter().any(Formula::has_iter),
        }
    }

    /// True if any temporal connective occurs anywhere, including inside
    /// nested headers.
    pub fn has_temporal_anywhere(&self) -> bool {
        match self {
            Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) | Formula::Until(..) => {
                true
            }
            Formula::Iter { header, system, .. } => {
                header.has_temporal_anywhere()
                    || system.defs.iter().any(|d| d.body.has_temporal_anywhere())
            }
            Formula::Derived { system, .. } => {
                system.defs.iter().any(|d| d.body.has_temporal_anywhere())
            }
            _ => self
                .children()
                .into_iter()
                .any(Formula::has_temporal_anywhere),
        }
    }
}
