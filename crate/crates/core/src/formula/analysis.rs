//! Syntactic analyses: free variables, polarity, well-formedness, and
//! capture-avoiding substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Definition, DerivedKind, Formula, IterationSystem, Term, RESERVED_PREFIX};
use crate::error::{Error, Result};
use crate::structure::Signature;

/// Free individual variables in order of first occurrence.
pub fn free_vars_ordered(f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    let mut bound = Vec::new();
    collect_fv(f, &mut bound, &mut out);
    out
}

pub fn free_variables(f: &Formula) -> BTreeSet<String> {
    free_vars_ordered(f).into_iter().collect()
}

/// The result columns of a header: its free variables in first-occurrence order.
pub fn header_vars(header: &Formula) -> Vec<String> {
    free_vars_ordered(header)
}

/// Variables free in some body of the system other than that body's own
/// bound variables.
pub fn system_params(system: &IterationSystem) -> Vec<String> {
    let mut out = Vec::new();
    for d in &system.defs {
        let mut bound: Vec<String> = d.vars.clone();
        collect_fv(&d.body, &mut bound, &mut out);
    }
    out
}

fn push_term(t: &Term, bound: &[String], out: &mut Vec<String>) {
    if let Term::Var(v) = t {
        if !bound.contains(v) && !out.contains(v) {
            out.push(v.clone());
        }
    }
}

fn collect_fv(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match f {
        Formula::Atom { args, .. } => args.iter().for_each(|t| push_term(t, bound, out)),
        Formula::Eq(a, b) => {
            push_term(a, bound, out);
            push_term(b, bound, out);
        }
        Formula::Exists(v, a) | Formula::Forall(v, a) => {
            bound.push(v.clone());
            collect_fv(a, bound, out);
            bound.pop();
        }
        Formula::Iter { system, args, .. } | Formula::Derived { system, args, .. } => {
            args.iter().for_each(|t| push_term(t, bound, out));
            for d in &system.defs {
                let depth = bound.len();
                bound.extend(d.vars.iter().cloned());
                collect_fv(&d.body, bound, out);
                bound.truncate(depth);
            }
        }
        _ => {
            for c in f.children() {
                collect_fv(c, bound, out);
            }
        }
    }
}

/// Predicate names occurring free (not bound by an enclosing system).
pub fn free_predicates(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_preds(f, &mut Vec::new(), &mut out);
    out
}

fn collect_preds(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match f {
        Formula::Atom { pred, .. } => {
            if !bound.contains(pred) {
                out.insert(pred.clone());
            }
        }
        Formula::Iter { header, system, .. } => {
            let depth = bound.len();
            bound.extend(system.preds().map(String::from));
            collect_preds(header, bound, out);
            for d in &system.defs {
                collect_preds(&d.body, bound, out);
            }
            bound.truncate(depth);
        }
        Formula::Derived { system, .. } => {
            let depth = bound.len();
            bound.extend(system.preds().map(String::from));
            for d in &system.defs {
                collect_preds(&d.body, bound, out);
            }
            bound.truncate(depth);
        }
        _ => {
            for c in f.children() {
                collect_preds(c, bound, out);
            }
        }
    }
}

/// True if `p` occurs free in `f`.
pub fn mentions_pred(f: &Formula, p: &str) -> bool {
    free_predicates(f).contains(p)
}

/// True if a temporal connective occurs in `f` outside nested iteration
/// constructs.
pub fn is_temporal(f: &Formula) -> bool {
    match f {
        Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) | Formula::Until(..) => true,
        _ => f.children().into_iter().any(is_temporal),
    }
}

/// Sign of the occurrences of a predicate in a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Absent,
    Positive,
    Negative,
    Mixed,
}

impl Polarity {
    pub fn join(self, other: Polarity) -> Polarity {
        use Polarity::*;
        match (self, other) {
            (Absent, x) | (x, Absent) => x,
            (a, b) if a == b => a,
            _ => Mixed,
        }
    }

    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            p => p,
        }
    }

    /// Positive or absent: the operator is monotone in the predicate.
    pub fn is_monotone(self) -> bool {
        matches!(self, Polarity::Positive | Polarity::Absent)
    }

    /// Negative or absent: the operator is anti-monotone in the predicate.
    pub fn is_antitone(self) -> bool {
        matches!(self, Polarity::Negative | Polarity::Absent)
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Absent => "absent",
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Mixed => "mixed",
        })
    }
}

/// Polarity of the free occurrences of `p` in `f`.
///
/// `->` and `<->` are read through their usual desugaring. Occurrences
/// inside a nested `lfp` count with the sign of their position in its body;
/// occurrences inside any other nested construct count as mixed.
pub fn polarity(f: &Formula, p: &str) -> Polarity {
    pol(f, p, true)
}

fn signed(positive: bool) -> Polarity {
    if positive {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

fn pol(f: &Formula, p: &str, positive: bool) -> Polarity {
    match f {
        Formula::Atom { pred, .. } => {
            if pred == p {
                signed(positive)
            } else {
                Polarity::Absent
            }
        }
        Formula::Eq(..) => Polarity::Absent,
        Formula::Not(a) => pol(a, p, !positive),
        Formula::Implies(a, b) => pol(a, p, !positive).join(pol(b, p, positive)),
        Formula::Iff(a, b) => {
            let inner = pol(a, p, true).join(pol(b, p, true));
            if inner == Polarity::Absent {
                Polarity::Absent
            } else {
                Polarity::Mixed
            }
        }
        Formula::Derived {
            kind: DerivedKind::Lfp,
            system,
            ..
        } => {
            if system.binds(p) {
                return Polarity::Absent;
            }
            system.defs.iter().fold(Polarity::Absent, |acc, d| {
                acc.join(pol(&d.body, p, positive))
            })
        }
        Formula::Iter { .. } | Formula::Derived { .. } => {
            if mentions_pred(f, p) {
                Polarity::Mixed
            } else {
                Polarity::Absent
            }
        }
        _ => f
            .children()
            .into_iter()
            .fold(Polarity::Absent, |acc, c| acc.join(pol(c, p, positive))),
    }
}

/// Generates reserved names that do not occur in a given set of formulas.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    counter: usize,
    taken: BTreeSet<String>,
}

impl FreshNames {
    pub fn new() -> Self {
        Self::default()
    }

    /// A generator that never returns a name used anywhere in `f`.
    pub fn avoiding(f: &Formula) -> Self {
        let mut g = Self::new();
        g.reserve_formula(f);
        g
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        collect_names(f, &mut self.taken);
    }

    pub fn fresh(&mut self, base: &str) -> String {
        loop {
            let name = format!("{RESERVED_PREFIX}{base}{}", self.counter);
            self.counter += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    pub fn fresh_vec(&mut self, base: &str, k: usize) -> Vec<String> {
        (0..k).map(|_| self.fresh(base)).collect()
    }
}

fn collect_names(f: &Formula, out: &mut BTreeSet<String>) {
    let term = |t: &Term, out: &mut BTreeSet<String>| match t {
        Term::Var(v) | Term::Const(v) => {
            out.insert(v.clone());
        }
    };
    match f {
        Formula::Atom { pred, args } => {
            out.insert(pred.clone());
            args.iter().for_each(|t| term(t, out));
        }
        Formula::Eq(a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::Exists(v, a) | Formula::Forall(v, a) => {
            out.insert(v.clone());
            collect_names(a, out);
        }
        Formula::Iter {
            header,
            system,
            args,
        } => {
            collect_names(header, out);
            collect_system_names(system, out);
            args.iter().for_each(|t| term(t, out));
        }
        Formula::Derived { system, args, .. } => {
            collect_system_names(system, out);
            args.iter().for_each(|t| term(t, out));
        }
        _ => f.children().into_iter().for_each(|c| collect_names(c, out)),
    }
}

fn collect_system_names(system: &IterationSystem, out: &mut BTreeSet<String>) {
    for d in &system.defs {
        out.insert(d.pred.clone());
        out.extend(d.vars.iter().cloned());
        collect_names(&d.body, out);
    }
}

fn term_vars(map: &BTreeMap<String, Term>) -> BTreeSet<String> {
    map.values()
        .filter_map(|t| t.as_var().map(String::from))
        .collect()
}

fn subst_term(t: &Term, map: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
    }
}

/// Capture-avoiding substitution of terms for free variables. Binders that
/// would capture a variable of the substituted terms are renamed.
pub fn subst_vars(f: &Formula, map: &BTreeMap<String, Term>, fresh: &mut FreshNames) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    let range = term_vars(map);
    match f {
        Formula::Atom { pred, args } => Formula::Atom {
            pred: pred.clone(),
            args: args.iter().map(|t| subst_term(t, map)).collect(),
        },
        Formula::Eq(a, b) => Formula::Eq(subst_term(a, map), subst_term(b, map)),
        Formula::Exists(v, a) | Formula::Forall(v, a) => {
            let mut inner = map.clone();
            inner.remove(v);
            let (v2, body) = if range.contains(v) && !inner.is_empty() {
                let v2 = fresh.fresh("v");
                inner.insert(v.clone(), Term::Var(v2.clone()));
                (v2, subst_vars(a, &inner, fresh))
            } else {
                (v.clone(), subst_vars(a, &inner, fresh))
            };
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(v2, Box::new(body))
            } else {
                Formula::Forall(v2, Box::new(body))
            }
        }
        Formula::Iter {
            header,
            system,
            args,
        } => Formula::Iter {
            header: header.clone(),
            system: subst_system(system, map, &range, fresh),
            args: args.iter().map(|t| subst_term(t, map)).collect(),
        },
        Formula::Derived { kind, system, args } => Formula::Derived {
            kind: *kind,
            system: subst_system(system, map, &range, fresh),
            args: args.iter().map(|t| subst_term(t, map)).collect(),
        },
        _ => map_children(f, |c| subst_vars(c, map, fresh)),
    }
}

fn subst_system(
    system: &IterationSystem,
    map: &BTreeMap<String, Term>,
    range: &BTreeSet<String>,
    fresh: &mut FreshNames,
) -> IterationSystem {
    let defs = system
        .defs
        .iter()
        .map(|d| {
            let mut inner = map.clone();
            for v in &d.vars {
                inner.remove(v);
            }
            if inner.is_empty() {
                return d.clone();
            }
            let mut vars = d.vars.clone();
            for v in vars.iter_mut() {
                if range.contains(v) {
                    let v2 = fresh.fresh("v");
                    inner.insert(v.clone(), Term::Var(v2.clone()));
                    *v = v2;
                }
            }
            Definition {
                pred: d.pred.clone(),
                vars,
                body: subst_vars(&d.body, &inner, fresh),
            }
        })
        .collect();
    IterationSystem { defs }
}

/// Rebuilds `f` with each same-scope child transformed by `g`.
pub(crate) fn map_children(f: &Formula, mut g: impl FnMut(&Formula) -> Formula) -> Formula {
    let b = |x: Formula| Box::new(x);
    match f {
        Formula::Atom { .. } | Formula::Eq(..) | Formula::Iter { .. } | Formula::Derived { .. } => {
            f.clone()
        }
        Formula::Not(a) => Formula::Not(b(g(a))),
        Formula::And(x, y) => Formula::And(b(g(x)), b(g(y))),
        Formula::Or(x, y) => Formula::Or(b(g(x)), b(g(y))),
        Formula::Implies(x, y) => Formula::Implies(b(g(x)), b(g(y))),
        Formula::Iff(x, y) => Formula::Iff(b(g(x)), b(g(y))),
        Formula::Until(x, y) => Formula::Until(b(g(x)), b(g(y))),
        Formula::Exists(v, a) => Formula::Exists(v.clone(), b(g(a))),
        Formula::Forall(v, a) => Formula::Forall(v.clone(), b(g(a))),
        Formula::Next(a) => Formula::Next(b(g(a))),
        Formula::Eventually(a) => Formula::Eventually(b(g(a))),
        Formula::Always(a) => Formula::Always(b(g(a))),
    }
}

/// Renames every binder (quantified variable or definition variable) whose
/// name is in `avoid`, at any depth.
pub fn rename_bound_apart(
    f: &Formula,
    avoid: &BTreeSet<String>,
    fresh: &mut FreshNames,
) -> Formula {
    match f {
        Formula::Exists(v, a) | Formula::Forall(v, a) => {
            let body = rename_bound_apart(a, avoid, fresh);
            let (v2, body) = if avoid.contains(v) {
                let v2 = fresh.fresh("v");
                let map = BTreeMap::from([(v.clone(), Term::Var(v2.clone()))]);
                let body = subst_vars(&body, &map, fresh);
                (v2, body)
            } else {
                (v.clone(), body)
            };
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(v2, Box::new(body))
            } else {
                Formula::Forall(v2, Box::new(body))
            }
        }
        Formula::Iter {
            header,
            system,
            args,
        } => Formula::Iter {
            header: Box::new(rename_bound_apart(header, avoid, fresh)),
            system: rename_system_apart(system, avoid, fresh),
            args: args.clone(),
        },
        Formula::Derived { kind, system, args } => Formula::Derived {
            kind: *kind,
            system: rename_system_apart(system, avoid, fresh),
            args: args.clone(),
        },
        _ => map_children(f, |c| rename_bound_apart(c, avoid, fresh)),
    }
}

fn rename_system_apart(
    system: &IterationSystem,
    avoid: &BTreeSet<String>,
    fresh: &mut FreshNames,
) -> IterationSystem {
    let defs = system
        .defs
        .iter()
        .map(|d| {
            let mut body = rename_bound_apart(&d.body, avoid, fresh);
            let mut vars = d.vars.clone();
            let mut map = BTreeMap::new();
            for v in vars.iter_mut() {
                if avoid.contains(v) {
                    let v2 = fresh.fresh("v");
                    map.insert(v.clone(), Term::Var(v2.clone()));
                    *v = v2;
                }
            }
            if !map.is_empty() {
                body = subst_vars(&body, &map, fresh);
            }
            Definition {
                pred: d.pred.clone(),
                vars,
                body,
            }
        })
        .collect();
    IterationSystem { defs }
}

/// Replaces every free occurrence `p(t1..tk)` with `repl(t1..tk)`.
///
/// `repl_free` lists the variables the replacement may introduce besides the
/// arguments; binders of `f` with those names are renamed first.
pub fn replace_pred(
    f: &Formula,
    p: &str,
    repl: &dyn Fn(&[Term]) -> Formula,
    repl_free: &BTreeSet<String>,
    fresh: &mut FreshNames,
) -> Formula {
    let f = if repl_free.is_empty() {
        f.clone()
    } else {
        rename_bound_apart(f, repl_free, fresh)
    };
    replace_pred_rec(&f, p, repl)
}

fn replace_pred_rec(f: &Formula, p: &str, repl: &dyn Fn(&[Term]) -> Formula) -> Formula {
    match f {
        Formula::Atom { pred, args } if pred == p => repl(args),
        Formula::Iter {
            header,
            system,
            args,
        } => {
            if system.binds(p) {
                return f.clone();
            }
            Formula::Iter {
                header: Box::new(replace_pred_rec(header, p, repl)),
                system: replace_in_system(system, p, repl),
                args: args.clone(),
            }
        }
        Formula::Derived { kind, system, args } => {
            if system.binds(p) {
                return f.clone();
            }
            Formula::Derived {
                kind: *kind,
                system: replace_in_system(system, p, repl),
                args: args.clone(),
            }
        }
        _ => map_children(f, |c| replace_pred_rec(c, p, repl)),
    }
}

fn replace_in_system(
    system: &IterationSystem,
    p: &str,
    repl: &dyn Fn(&[Term]) -> Formula,
) -> IterationSystem {
    IterationSystem {
        defs: system
            .defs
            .iter()
            .map(|d| Definition {
                pred: d.pred.clone(),
                vars: d.vars.clone(),
                body: replace_pred_rec(&d.body, p, repl),
            })
            .collect(),
    }
}

/// Well-formedness against an optional signature: arities, bound predicate
/// variables, known constants, temporal placement and argument counts.
pub fn check_formula(f: &Formula, sig: Option<&Signature>) -> Result<()> {
    let mut scope = Vec::new();
    check_rec(f, sig, &mut scope, false)
}

fn check_term(t: &Term, sig: Option<&Signature>) -> Result<()> {
    if let (Term::Const(c), Some(sig)) = (t, sig) {
        if !sig.is_constant(c) {
            return Err(Error::UnknownConstant(c.clone()));
        }
    }
    Ok(())
}

fn check_system(
    system: &IterationSystem,
    sig: Option<&Signature>,
    scope: &mut Vec<(String, usize)>,
) -> Result<()> {
    if system.defs.is_empty() {
        return Err(Error::IllFormed("empty iteration system".into()));
    }
    for (i, d) in system.defs.iter().enumerate() {
        if system.defs[..i].iter().any(|e| e.pred == d.pred) {
            return Err(Error::IllFormed(format!(
                "predicate variable `{}` defined twice",
                d.pred
            )));
        }
        if let Some(sig) = sig {
            if sig.has_symbol(&d.pred) {
                return Err(Error::IllFormed(format!(
                    "predicate variable `{}` clashes with a signature symbol",
                    d.pred
                )));
            }
        }
        for (j, v) in d.vars.iter().enumerate() {
            if d.vars[..j].contains(v) {
                return Err(Error::IllFormed(format!(
                    "variable `{v}` repeated in definition of `{}`",
                    d.pred
                )));
            }
        }
    }
    let depth = scope.len();
    scope.extend(system.defs.iter().map(|d| (d.pred.clone(), d.arity())));
    let r = system
        .defs
        .iter()
        .try_for_each(|d| check_rec(&d.body, sig, scope, false));
    if r.is_err() {
        scope.truncate(depth);
    }
    r
}

fn check_rec(
    f: &Formula,
    sig: Option<&Signature>,
    scope: &mut Vec<(String, usize)>,
    in_header: bool,
) -> Result<()> {
    match f {
        Formula::Atom { pred, args } => {
            args.iter().try_for_each(|t| check_term(t, sig))?;
            let expected = scope
                .iter()
                .rev()
                .find(|(n, _)| n == pred)
                .map(|(_, a)| *a)
                .or_else(|| sig.and_then(|s| s.relation_arity(pred)));
            match expected {
                Some(k) if k != args.len() => Err(Error::ArityMismatch {
                    name: pred.clone(),
                    expected: k,
                    found: args.len(),
                }),
                None if sig.is_some() => Err(Error::UnboundPredicate(pred.clone())),
                _ => Ok(()),
            }
        }
        Formula::Eq(a, b) => {
            check_term(a, sig)?;
            check_term(b, sig)
        }
        Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) | Formula::Until(..)
            if !in_header =>
        {
            Err(Error::TemporalInFirstOrderContext)
        }
        Formula::Iter {
            header,
            system,
            args,
        } => {
            args.iter().try_for_each(|t| check_term(t, sig))?;
            let z = header_vars(header);
            if z.len() != args.len() {
                return Err(Error::ArityMismatch {
                    name: "iteration header".into(),
                    expected: z.len(),
                    found: args.len(),
                });
            }
            let depth = scope.len();
            check_system(system, sig, scope)?;
            let r = check_rec(header, sig, scope, true);
            scope.truncate(depth);
            r
        }
        Formula::Derived { kind, system, args } => {
            args.iter().try_for_each(|t| check_term(t, sig))?;
            if kind.single_only() && system.defs.len() != 1 {
                return Err(Error::IllFormed(format!(
                    "`{kind}` takes exactly one definition"
                )));
            }
            let k = system.defs.first().map_or(0, Definition::arity);
            if k != args.len() {
                return Err(Error::ArityMismatch {
                    name: system
                        .defs
                        .first()
                        .map_or_else(String::new, |d| d.pred.clone()),
                    expected: k,
                    found: args.len(),
                });
            }
            let depth = scope.len();
            check_system(system, sig, scope)?;
            scope.truncate(depth);
            Ok(())
        }
        _ => f
            .children()
            .into_iter()
            .try_for_each(|c| check_rec(c, sig, scope, in_header)),
    }
}
