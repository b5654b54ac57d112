//! Seeded random instances: structures, iteration bodies of a given sign,
//! temporal headers from the translatable fragments, lassos, and formulas
//! covering the whole grammar.
//!
//! Everything is drawn from a [`ChaCha8Rng`], so a seed fixes the output on
//! every platform.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{header_vars, Definition, DerivedKind, Formula, IterationSystem, Term};
use crate::iteration::Lasso;
use crate::structure::{all_tuples, FiniteStructure, Relation};

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_relation(rng: &mut Rng8, arity: usize, n: usize, density: f64) -> Relation {
    Relation::collect_arity(
        arity,
        all_tuples(n, arity).filter(|_| rng.gen_bool(density)),
    )
}

/// A structure over `E/2` and `P/1`, sometimes with a constant `c`.
pub fn structure(rng: &mut Rng8, max_domain: usize) -> FiniteStructure {
    let max = max_domain.max(1);
    // Mostly larger domains; tiny ones rarely exercise the iteration.
    let n = if rng.gen_bool(0.7) {
        rng.gen_range(max.div_ceil(2)..=max)
    } else {
        rng.gen_range(1..=max)
    };
    let mut s = FiniteStructure::new(n).expect("non-empty domain");
    let d = rng.gen_range(0.15..0.6);
    s.add_relation("E", random_relation(rng, 2, n, d))
        .expect("fresh symbol");
    s.add_relation("P", random_relation(rng, 1, n, 0.5))
        .expect("fresh symbol");
    if rng.gen_bool(0.3) {
        s.add_constant("c", rng.gen_range(0..n))
            .expect("fresh symbol");
    }
    s
}

/// A structure with relations of arity 0 to 3 and a few constants, for
/// round-trip tests of the file format.
pub fn rich_structure(rng: &mut Rng8, max_domain: usize) -> FiniteStructure {
    let n = rng.gen_range(1..=max_domain.max(1));
    let mut s = FiniteStructure::new(n).expect("non-empty domain");
    for i in 0..rng.gen_range(0..3) {
        s.add_constant(&format!("k{i}"), rng.gen_range(0..n))
            .expect("fresh symbol");
    }
    for i in 0..rng.gen_range(0..5) {
        let arity = rng.gen_range(0..=3);
        let rel = random_relation(rng, arity, n, 0.3);
        s.add_relation(&format!("Rel{i}"), rel)
            .expect("fresh symbol");
    }
    s
}

/// Sign constraint on the occurrences of the iteration predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyClass {
    Positive,
    Negative,
    Arbitrary,
}

fn var(rng: &mut Rng8, scope: &[String]) -> Term {
    Term::Var(scope.choose(rng).expect("non-empty scope").clone())
}

fn vars(rng: &mut Rng8, scope: &[String], k: usize) -> Vec<Term> {
    (0..k).map(|_| var(rng, scope)).collect()
}

/// A body over `E`, `P`, `=` and the predicate `pred` of arity `k`, with
/// free variables among `scope`.
pub fn body(
    rng: &mut Rng8,
    class: BodyClass,
    pred: &str,
    k: usize,
    scope: &[String],
    depth: usize,
) -> Formula {
    let mut names = scope.to_vec();
    body_rec(rng, Some(class), pred, k, &mut names, depth, true)
}

/// A formula over `E`, `P` and `=` only.
fn base(rng: &mut Rng8, scope: &[String], depth: usize) -> Formula {
    let mut names = scope.to_vec();
    body_rec(rng, None, "", 0, &mut names, depth, true)
}

fn body_rec(
    rng: &mut Rng8,
    class: Option<BodyClass>,
    pred: &str,
    k: usize,
    scope: &mut Vec<String>,
    depth: usize,
    positive: bool,
) -> Formula {
    let may_use_pred = match class {
        Some(BodyClass::Positive) => positive,
        Some(BodyClass::Negative) => !positive,
        Some(BodyClass::Arbitrary) => true,
        None => false,
    };
    if depth == 0 || rng.gen_bool(0.25) {
        if may_use_pred && rng.gen_bool(0.55) {
            return Formula::atom_terms(pred, vars(rng, scope, k));
        }
        return match rng.gen_range(0..3) {
            0 => Formula::atom_terms("E", vars(rng, scope, 2)),
            1 => Formula::atom_terms("P", vars(rng, scope, 1)),
            _ => Formula::eq(var(rng, scope), var(rng, scope)),
        };
    }
    match rng.gen_range(0..7) {
        0 => Formula::not(body_rec(rng, class, pred, k, scope, depth - 1, !positive)),
        1 | 2 => Formula::and(
            body_rec(rng, class, pred, k, scope, depth - 1, positive),
            body_rec(rng, class, pred, k, scope, depth - 1, positive),
        ),
        3 | 4 => Formula::or(
            body_rec(rng, class, pred, k, scope, depth - 1, positive),
            body_rec(rng, class, pred, k, scope, depth - 1, positive),
        ),
        _ => {
            let v = format!("q{}", scope.len());
            scope.push(v.clone());
            let inner = body_rec(rng, class, pred, k, scope, depth - 1, positive);
            scope.pop();
            if rng.gen_bool(0.6) {
                Formula::exists(&v, inner)
            } else {
                Formula::forall(&v, inner)
            }
        }
    }
}

/// Definition variables for arity `k`.
pub fn def_vars(k: usize) -> Vec<String> {
    ["x", "y", "v"][..k].iter().map(|s| s.to_string()).collect()
}

/// A single-definition system `R(x..) <- body` of arity 1 or 2.
pub fn system(rng: &mut Rng8, class: BodyClass) -> IterationSystem {
    let k = rng.gen_range(1..=2);
    let xs = def_vars(k);
    let b = body(rng, class, "R", k, &xs, 3);
    // Bodies that only test R tend to stay empty from the empty stage on;
    // a predicate-free part gives the iteration something to start from.
    let b = match rng.gen_range(0..8) {
        0..=2 => Formula::or(base(rng, &xs, 2), b),
        // Reachability-style recursion, which runs for several stages.
        5..=7 if class == BodyClass::Positive || rng.gen_bool(0.7) => {
            let mut args: Vec<Term> = xs.iter().map(|x| Term::var(x)).collect();
            let i = rng.gen_range(0..k);
            let edge = if rng.gen_bool(0.5) {
                Formula::atom_terms("E", vec![args[i].clone(), Term::var("q")])
            } else {
                Formula::atom_terms("E", vec![Term::var("q"), args[i].clone()])
            };
            args[i] = Term::var("q");
            let mut step = Formula::atom_terms("R", args);
            if class == BodyClass::Negative {
                step = Formula::not(step);
            }
            let step = Formula::exists("q", Formula::and(edge, step));
            let seed = if k == 2 {
                Formula::atom_terms("E", vec![Term::var("x"), Term::var("y")])
            } else {
                Formula::atom_terms("P", vec![Term::var("x")])
            };
            let rest = match rng.gen_range(0..3) {
                0 => seed,
                1 => base(rng, &xs, 2),
                _ => Formula::or(seed, b),
            };
            Formula::or(rest, step)
        }
        3 => Formula::and(base(rng, &xs, 2), b),
        // A direct negative test makes oscillation likely.
        4 if class != BodyClass::Positive => {
            let r = Formula::atom_terms("R", vars(rng, &xs, k));
            Formula::and(Formula::or(base(rng, &xs, 2), b), Formula::not(r))
        }
        _ => b,
    };
    IterationSystem::single_owned("R", &xs, b)
}

/// A system of one or two definitions with arbitrary bodies; the second
/// definition `S/1` may read and be read by `R`.
pub fn simultaneous_system(rng: &mut Rng8) -> IterationSystem {
    let mut sys = system(rng, BodyClass::Arbitrary);
    if rng.gen_bool(0.4) {
        let xs = def_vars(1);
        let k = sys.defs[0].arity();
        let r_atom = Formula::atom_terms("R", vec![Term::var("x"); k]);
        let b = body(rng, BodyClass::Arbitrary, "S", 1, &xs, 2);
        let b = if rng.gen_bool(0.5) {
            Formula::or(b, r_atom)
        } else {
            Formula::and(b, Formula::not(r_atom))
        };
        sys.defs.push(Definition {
            pred: "S".into(),
            vars: xs,
            body: b,
        });
        let s_atom = Formula::atom_terms("S", vec![Term::var("x")]);
        let r_body = sys.defs[0].body.clone();
        sys.defs[0].body = if rng.gen_bool(0.5) {
            Formula::or(r_body, s_atom)
        } else {
            Formula::and(r_body, Formula::not(s_atom))
        };
    }
    sys
}

/// Which temporal shapes a generated header may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderFragment {
    /// Booleans and quantifiers over non-temporal formulas and `F`/`G` of
    /// non-temporal formulas.
    EventuallyAlways,
    /// As above plus `X` at any depth and `U` of non-temporal formulas.
    NextUntil,
    /// Any nesting of `X`, `F`, `G`, `U` with booleans and quantifiers.
    Full,
    /// `X` as the only temporal operator.
    NextOnly,
}

const HEADER_VARS: [&str; 2] = ["z1", "z2"];

/// A header over the predicates of `system`, `E`, `P` and `=`.
pub fn header(
    rng: &mut Rng8,
    system: &IterationSystem,
    fragment: HeaderFragment,
    depth: usize,
) -> Formula {
    let mut scope: Vec<String> = HEADER_VARS.iter().map(|s| s.to_string()).collect();
    let h = header_rec(rng, system, fragment, &mut scope, depth, true);
    if header_vars(&h).is_empty() && rng.gen_bool(0.7) {
        // Keep most instances non-closed so the result has columns.
        Formula::and(h, Formula::eq(Term::var("z1"), Term::var("z1")))
    } else {
        h
    }
}

fn header_atom(rng: &mut Rng8, system: &IterationSystem, scope: &[String]) -> Formula {
    if rng.gen_bool(0.6) {
        let d = system.defs.choose(rng).expect("non-empty system");
        return Formula::atom_terms(&d.pred, vars(rng, scope, d.arity()));
    }
    match rng.gen_range(0..3) {
        0 => Formula::atom_terms("E", vars(rng, scope, 2)),
        1 => Formula::atom_terms("P", vars(rng, scope, 1)),
        _ => Formula::eq(var(rng, scope), var(rng, scope)),
    }
}

fn header_rec(
    rng: &mut Rng8,
    system: &IterationSystem,
    fragment: HeaderFragment,
    scope: &mut Vec<String>,
    depth: usize,
    temporal_ok: bool,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return header_atom(rng, system, scope);
    }
    let pick = rng.gen_range(0..10);
    let sub = |rng: &mut Rng8, scope: &mut Vec<String>, t: bool| {
        header_rec(rng, system, fragment, scope, depth - 1, t)
    };
    if temporal_ok && pick >= 5 {
        let nested = fragment == HeaderFragment::Full;
        return match (fragment, pick) {
            (HeaderFragment::NextOnly, _) => Formula::next(sub(rng, scope, true)),
            (_, 5 | 6) => Formula::eventually(sub(rng, scope, nested)),
            (_, 7) => Formula::always(sub(rng, scope, nested)),
            (HeaderFragment::EventuallyAlways, _) => Formula::eventually(sub(rng, scope, false)),
            (_, 8) => Formula::next(sub(rng, scope, true)),
            _ => Formula::until(sub(rng, scope, nested), sub(rng, scope, nested)),
        };
    }
    match pick % 5 {
        0 => Formula::not(sub(rng, scope, temporal_ok)),
        1 => Formula::and(sub(rng, scope, temporal_ok), sub(rng, scope, temporal_ok)),
        2 => Formula::or(sub(rng, scope, temporal_ok), sub(rng, scope, temporal_ok)),
        3 if rng.gen_bool(0.3) => {
            Formula::implies(sub(rng, scope, temporal_ok), sub(rng, scope, temporal_ok))
        }
        _ => {
            let v = format!("w{}", scope.len());
            scope.push(v.clone());
            let inner = sub(rng, scope, temporal_ok);
            scope.pop();
            if rng.gen_bool(0.5) {
                Formula::exists(&v, inner)
            } else {
                Formula::forall(&v, inner)
            }
        }
    }
}

/// `[header][iter system](a1, .., am)` with one fresh argument variable per
/// header column. Returns the formula and its argument variables.
pub fn iteration_query(header: Formula, system: IterationSystem) -> (Formula, Vec<String>) {
    let cols = header_vars(&header);
    let args: Vec<String> = (1..=cols.len()).map(|i| format!("a{i}")).collect();
    let terms = args.iter().map(|a| Term::Var(a.clone())).collect();
    (Formula::iter(header, system, terms), args)
}

/// `kind[system](a1, .., ak)` over the first definition's arity.
pub fn derived_query(kind: DerivedKind, system: IterationSystem) -> (Formula, Vec<String>) {
    let k = system.defs[0].arity();
    let args: Vec<String> = (1..=k).map(|i| format!("a{i}")).collect();
    let terms = args.iter().map(|a| Term::Var(a.clone())).collect();
    (Formula::derived(kind, system, terms), args)
}

/// A lasso over one predicate `R` of arity 1 or 2 with random stages that
/// need not come from any operator.
pub fn lasso(rng: &mut Rng8, n: usize) -> Lasso {
    let k = rng.gen_range(1..=2);
    let len = rng.gen_range(1..=5);
    let prefix = rng.gen_range(0..len);
    let stages = (0..len)
        .map(|i| {
            if i == 0 && rng.gen_bool(0.5) {
                vec![Relation::empty(k)]
            } else {
                vec![random_relation(rng, k, n, 0.4)]
            }
        })
        .collect();
    Lasso::from_parts(vec![("R".into(), k)], stages, prefix).expect("well-formed lasso")
}

/// A random formula over the full grammar, for parser round trips. Every
/// generated formula is well formed.
pub fn any_formula(rng: &mut Rng8, depth: usize) -> Formula {
    let mut scope = vec!["x".to_string(), "y".to_string()];
    any_rec(rng, &mut scope, &[], depth)
}

fn any_atom(rng: &mut Rng8, scope: &[String], preds: &[(String, usize)]) -> Formula {
    let term = |rng: &mut Rng8| {
        if rng.gen_bool(0.1) {
            Term::constant("c")
        } else {
            var(rng, scope)
        }
    };
    if !preds.is_empty() && rng.gen_bool(0.5) {
        let (p, k) = preds.choose(rng).expect("non-empty").clone();
        return Formula::atom_terms(&p, (0..k).map(|_| term(rng)).collect());
    }
    match rng.gen_range(0..4) {
        0 => Formula::atom_terms("E", vec![term(rng), term(rng)]),
        1 => Formula::atom_terms("P", vec![term(rng)]),
        2 => Formula::atom_terms("B", vec![]),
        _ => Formula::eq(term(rng), term(rng)),
    }
}

fn any_rec(
    rng: &mut Rng8,
    scope: &mut Vec<String>,
    preds: &[(String, usize)],
    depth: usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.15) {
        return any_atom(rng, scope, preds);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 => Formula::not(any_rec(rng, scope, preds, d)),
        1 => Formula::and(any_rec(rng, scope, preds, d), any_rec(rng, scope, preds, d)),
        2 => Formula::or(any_rec(rng, scope, preds, d), any_rec(rng, scope, preds, d)),
        3 => Formula::implies(any_rec(rng, scope, preds, d), any_rec(rng, scope, preds, d)),
        4 => Formula::iff(any_rec(rng, scope, preds, d), any_rec(rng, scope, preds, d)),
        5 | 6 => {
            let v = ["x", "y", "u", "w"]
                .choose(rng)
                .expect("non-empty")
                .to_string();
            scope.push(v.clone());
            let inner = any_rec(rng, scope, preds, d);
            scope.pop();
            if rng.gen_bool(0.5) {
                Formula::exists(&v, inner)
            } else {
                Formula::forall(&v, inner)
            }
        }
        7 | 8 => {
            let sys = any_system(rng, scope, preds, d, 2);
            let h = any_header(rng, &sys, d);
            let k = header_vars(&h).len();
            let args = (0..k).map(|_| var(rng, scope)).collect();
            Formula::iter(h, sys, args)
        }
        _ => {
            let kind = *DerivedKind::ALL.choose(rng).expect("non-empty");
            let sys = any_system(rng, scope, preds, d, if kind.single_only() { 1 } else { 2 });
            let k = sys.defs[0].arity();
            let args = (0..k).map(|_| var(rng, scope)).collect();
            Formula::derived(kind, sys, args)
        }
    }
}

fn any_system(
    rng: &mut Rng8,
    scope: &[String],
    preds: &[(String, usize)],
    depth: usize,
    max_defs: usize,
) -> IterationSystem {
    let count = rng.gen_range(1..=max_defs);
    let names = ["R", "S"];
    let arities: Vec<usize> = (0..count).map(|_| rng.gen_range(0..=2)).collect();
    let mut inner_preds: Vec<(String, usize)> = preds
        .iter()
        .filter(|(p, _)| !names[..count].contains(&p.as_str()))
        .cloned()
        .collect();
    for (i, &k) in arities.iter().enumerate() {
        inner_preds.push((names[i].to_string(), k));
    }
    let defs = (0..count)
        .map(|i| {
            let xs = def_vars(arities[i]);
            let mut body_scope: Vec<String> = scope.to_vec();
            body_scope.extend(xs.iter().cloned());
            Definition {
                pred: names[i].to_string(),
                vars: xs,
                body: any_rec(rng, &mut body_scope, &inner_preds, depth),
            }
        })
        .collect();
    IterationSystem::new(defs)
}

fn any_header(rng: &mut Rng8, system: &IterationSystem, depth: usize) -> Formula {
    let mut scope: Vec<String> = HEADER_VARS.iter().map(|s| s.to_string()).collect();
    header_rec(
        rng,
        system,
        HeaderFragment::Full,
        &mut scope,
        depth.min(3),
        true,
    )
}

/// The signature used by [`any_formula`], as a structure file prefix.
pub const ANY_FORMULA_SIGNATURE: &str =
    "domain 2\nconst c = 0\nrel B/0 = { }\nrel E/2 = { }\nrel P/1 = { }\n";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{check_formula, polarity, Polarity};

    #[test]
    fn bodies_respect_their_class() {
        let mut r = rng(3);
        for _ in 0..300 {
            let xs = def_vars(2);
            let p = polarity(&body(&mut r, BodyClass::Positive, "R", 2, &xs, 4), "R");
            assert!(p.is_monotone());
            let n = polarity(&body(&mut r, BodyClass::Negative, "R", 2, &xs, 4), "R");
            assert!(n.is_antitone());
        }
        let mixed = (0..200)
            .filter(|_| {
                polarity(
                    &body(&mut r, BodyClass::Arbitrary, "R", 1, &def_vars(1), 4),
                    "R",
                ) == Polarity::Mixed
            })
            .count();
        assert!(mixed > 0);
    }

    #[test]
    fn same_seed_same_output() {
        let a: Vec<String> = (0..5)
            .map(|_| 0)
            .scan(rng(9), |r, _| Some(any_formula(r, 4).to_string()))
            .collect();
        let b: Vec<String> = (0..5)
            .map(|_| 0)
            .scan(rng(9), |r, _| Some(any_formula(r, 4).to_string()))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_formulas_are_well_formed() {
        let sig = crate::structure::parse_structure(ANY_FORMULA_SIGNATURE).unwrap();
        let mut r = rng(11);
        for _ in 0..300 {
            let f = any_formula(&mut r, 5);
            check_formula(&f, Some(sig.signature())).unwrap_or_else(|e| panic!("{f}: {e}"));
        }
    }

    #[test]
    fn structures_respect_max_domain() {
        let mut r = rng(5);
        for _ in 0..100 {
            assert!(structure(&mut r, 2).domain_size() <= 2);
        }
    }
}
