//! Direct oracles and the seeded law suites built on them.
//!
//! The oracles iterate operators by hand through [`Evaluator::apply_operator`]
//! and never go through the lasso machinery or the temporal evaluator, so a
//! law compares two independent computations of the same relation.

use std::fmt;

use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::formula::{
    header_vars, parse_formula, DerivedKind, Formula, IterationSystem, ParseOptions,
};
use crate::gen::{self, BodyClass, HeaderFragment, Rng8};
use crate::rewrite::{self, RewriteOptions};
use crate::structure::{parse_structure, FiniteStructure, Relation};
use crate::translate;

/// `Phi^i(empty)` for `i = 0, 1, ..` up to and including the first repeat.
fn raw_stages(ev: &Evaluator, sys: &IterationSystem) -> Result<Vec<Relation>> {
    let k = sys.defs[0].arity();
    let mut seen = vec![vec![Relation::empty(k)]];
    for d in &sys.defs[1..] {
        seen[0].push(Relation::empty(d.arity()));
    }
    loop {
        let next = ev.apply_operator(sys, seen.last().expect("non-empty"))?;
        let repeat = seen.contains(&next);
        seen.push(next);
        if repeat {
            return Ok(seen.into_iter().map(|mut st| st.swap_remove(0)).collect());
        }
        if seen.len() > 100_000 {
            return Err(Error::StepLimitExceeded(100_000));
        }
    }
}

/// The stage sequence of the first predicate split into the stages before
/// the loop and the loop itself.
pub fn prefix_and_loop(
    ev: &Evaluator,
    sys: &IterationSystem,
) -> Result<(Vec<Relation>, Vec<Relation>)> {
    // The last stage repeats an earlier one; the loop starts there.
    let k = sys.defs[0].arity();
    let mut full: Vec<Vec<Relation>> = vec![sys
        .defs
        .iter()
        .map(|d| Relation::empty(d.arity()))
        .collect()];
    loop {
        let next = ev.apply_operator(sys, full.last().expect("non-empty"))?;
        if let Some(start) = full.iter().position(|s| *s == next) {
            let firsts: Vec<Relation> = full.into_iter().map(|mut s| s.swap_remove(0)).collect();
            debug_assert!(firsts.iter().all(|r| r.arity() == k));
            let (pre, lp) = firsts.split_at(start);
            return Ok((pre.to_vec(), lp.to_vec()));
        }
        full.push(next);
    }
}

/// Least fixed point by Knaster–Tarski iteration from the empty relation.
pub fn knaster_tarski(ev: &Evaluator, sys: &IterationSystem) -> Result<Relation> {
    let stages = raw_stages(ev, sys)?;
    Ok(stages.last().expect("non-empty").clone())
}

/// Limit of the inflationary iteration `X := X | Phi(X)`.
pub fn inflationary_limit(ev: &Evaluator, sys: &IterationSystem) -> Result<Relation> {
    let [d] = sys.defs.as_slice() else {
        return Err(Error::IllFormed("single definition expected".into()));
    };
    let mut x = Relation::empty(d.arity());
    loop {
        let next = x.union(&ev.apply_operator(sys, std::slice::from_ref(&x))?[0]);
        if next == x {
            return Ok(x);
        }
        x = next;
    }
}

/// Partial fixed point: the limit when the sequence settles, else empty.
pub fn partial_limit(ev: &Evaluator, sys: &IterationSystem) -> Result<Relation> {
    let (_, lp) = prefix_and_loop(ev, sys)?;
    Ok(if lp.len() == 1 {
        lp[0].clone()
    } else {
        Relation::empty(sys.defs[0].arity())
    })
}

fn intersect_all(rs: &[Relation]) -> Relation {
    rs[1..]
        .iter()
        .fold(rs[0].clone(), |acc, r| acc.intersection(r))
}

fn union_all(k: usize, rs: &[Relation]) -> Relation {
    rs.iter().fold(Relation::empty(k), |acc, r| acc.union(r))
}

/// Least (`from_full = false`) or greatest fixed point of `Phi^2`, by
/// iterating `Phi` twice per step from the empty or the full relation.
pub fn squared_fixpoint(
    ev: &Evaluator,
    sys: &IterationSystem,
    from_full: bool,
) -> Result<Relation> {
    let k = sys.defs[0].arity();
    let n = ev.structure().domain_size();
    let mut x = if from_full {
        Relation::full(k, n)
    } else {
        Relation::empty(k)
    };
    loop {
        let once = ev.apply_operator(sys, &[x.clone()])?;
        let twice = ev.apply_operator(sys, &once)?.swap_remove(0);
        if twice == x {
            return Ok(x);
        }
        x = twice;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    LfpDirect,
    IfpDirect,
    PfpDirect,
    PfpGenLoop,
    OscSquared,
    IdMonotone,
    Thm1Roundtrip,
    Thm1NextUntil,
    LfpRoundtrip,
    UnrollInvariance,
    FgDuality,
    UntilUnfolding,
    XDepthLocality,
    EngineBounds,
    ParserRoundtrip,
    StructureRoundtrip,
}

impl Law {
    pub const ALL: [Law; 16] = [
        Law::LfpDirect,
        Law::IfpDirect,
        Law::PfpDirect,
        Law::PfpGenLoop,
        Law::OscSquared,
        Law::IdMonotone,
        Law::Thm1Roundtrip,
        Law::Thm1NextUntil,
        Law::LfpRoundtrip,
        Law::UnrollInvariance,
        Law::FgDuality,
        Law::UntilUnfolding,
        Law::XDepthLocality,
        Law::EngineBounds,
        Law::ParserRoundtrip,
        Law::StructureRoundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::LfpDirect => "lfp-direct",
            Law::IfpDirect => "ifp-direct",
            Law::PfpDirect => "pfp-direct",
            Law::PfpGenLoop => "pfpgen-loop",
            Law::OscSquared => "osc-squared",
            Law::IdMonotone => "id-monotone",
            Law::Thm1Roundtrip => "thm1-roundtrip",
            Law::Thm1NextUntil => "thm1-next-until",
            Law::LfpRoundtrip => "lfp-roundtrip",
            Law::UnrollInvariance => "unroll-invariance",
            Law::FgDuality => "fg-duality",
            Law::UntilUnfolding => "until-unfolding",
            Law::XDepthLocality => "xdepth-locality",
            Law::EngineBounds => "engine-bounds",
            Law::ParserRoundtrip => "parser-roundtrip",
            Law::StructureRoundtrip => "structure-roundtrip",
        }
    }

    pub fn from_name(s: &str) -> Option<Law> {
        Law::ALL.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failing instance, printable as a structure file and a query that can
/// be rerun with `tai eval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub structure: String,
    pub formula: String,
    pub detail: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "structure:\n{}", self.structure.trim_end())?;
        writeln!(f, "formula: {}", self.formula)?;
        write!(f, "detail: {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawReport {
    pub law: Law,
    pub total: usize,
    pub passed: usize,
    pub first_failure: Option<Counterexample>,
}

impl LawReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} pass", self.law, self.passed, self.total)?;
        if let Some(c) = &self.first_failure {
            write!(f, "\nfirst counterexample:\n{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LawConfig {
    pub count: usize,
    pub seed: u64,
    pub max_domain: usize,
    pub max_steps: usize,
    pub rewrite: RewriteOptions,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            count: 100,
            seed: 7,
            max_domain: 4,
            max_steps: crate::eval::DEFAULT_MAX_STEPS,
            rewrite: RewriteOptions::default(),
        }
    }
}

/// Outcome of one instance: `Ok(())` or a description of the mismatch.
type Outcome = std::result::Result<(), String>;

struct Instance {
    structure: FiniteStructure,
    formula: String,
    outcome: Outcome,
}

pub fn run(law: Law, cfg: &LawConfig) -> LawReport {
    let mut rng = gen::rng(cfg.seed);
    let mut report = LawReport {
        law,
        total: cfg.count,
        passed: 0,
        first_failure: None,
    };
    for _ in 0..cfg.count {
        let inst = instance(law, cfg, &mut rng);
        match inst.outcome {
            Ok(()) => report.passed += 1,
            Err(detail) => {
                report.first_failure.get_or_insert(Counterexample {
                    structure: inst.structure.to_string(),
                    formula: inst.formula,
                    detail,
                });
            }
        }
    }
    report
}

fn show(r: &Relation) -> String {
    if r.is_empty() {
        "{}".to_string()
    } else {
        r.to_block()
    }
}

fn compare(what: &str, got: Result<Relation>, want: Result<Relation>) -> Outcome {
    match (got, want) {
        (Ok(g), Ok(w)) if g == w => Ok(()),
        (Ok(g), Ok(w)) => Err(format!("{what}: got {} expected {}", show(&g), show(&w))),
        (Err(e), _) => Err(format!("{what}: evaluation failed: {e}")),
        (_, Err(e)) => Err(format!("{what}: oracle failed: {e}")),
    }
}

/// Evaluates a derived construct through its iteration encoding.
fn eval_encoding(
    ev: &Evaluator,
    f: &Formula,
    vars: &[String],
    opts: RewriteOptions,
) -> Result<Relation> {
    let core = rewrite::expand_with(f, opts)?;
    ev.query(&core, vars)
}

fn instance(law: Law, cfg: &LawConfig, rng: &mut Rng8) -> Instance {
    let structure = gen::structure(rng, cfg.max_domain);
    let ev = Evaluator::new(&structure).with_max_steps(cfg.max_steps);
    let enc = |kind: DerivedKind, sys: &IterationSystem| {
        let (f, vars) = gen::derived_query(kind, sys.clone());
        let r = eval_encoding(&ev, &f, &vars, cfg.rewrite);
        (f.to_string(), r)
    };
    let (formula, outcome) = match law {
        Law::LfpDirect => {
            let sys = gen::system(rng, BodyClass::Positive);
            let want = knaster_tarski(&ev, &sys);
            let (f, r) = enc(DerivedKind::Lfp, &sys);
            let mut outcome = compare("lfp", r, want.clone());
            // On monotone bodies the other iteration readings coincide.
            for kind in [
                DerivedKind::Ifp,
                DerivedKind::Pfp,
                DerivedKind::PfpGen,
                DerivedKind::PfpCup,
            ] {
                if outcome.is_ok() {
                    outcome = compare(kind.keyword(), enc(kind, &sys).1, want.clone());
                }
            }
            (f, outcome)
        }
        Law::IfpDirect => {
            let sys = gen::system(rng, BodyClass::Arbitrary);
            let (f, r) = enc(DerivedKind::Ifp, &sys);
            (f, compare("ifp", r, inflationary_limit(&ev, &sys)))
        }
        Law::PfpDirect => {
            let sys = gen::system(rng, BodyClass::Arbitrary);
            let k = sys.defs[0].arity();
            let stages = prefix_and_loop(&ev, &sys);
            let (f, r) = enc(DerivedKind::Pfp, &sys);
            let mut outcome = compare("pfp", r, partial_limit(&ev, &sys));
            if outcome.is_ok() {
                let (_, cup) = enc(DerivedKind::PfpCup, &sys);
                let all = stages.as_ref().map(|(p, l)| {
                    let mut v = p.clone();
                    v.extend(l.iter().cloned());
                    union_all(k, &v)
                });
                outcome = compare("pfpcup", cup, all.map_err(Clone::clone));
            }
            if outcome.is_ok() {
                let (_, cap) = enc(DerivedKind::PfpCap, &sys);
                outcome = compare("pfpcap", cap, Ok(Relation::empty(k)));
            }
            (f, outcome)
        }
        Law::PfpGenLoop => {
            let sys = gen::system(rng, BodyClass::Arbitrary);
            let k = sys.defs[0].arity();
            let lp = prefix_and_loop(&ev, &sys).map(|(_, l)| l);
            let (f, gen_r) = enc(DerivedKind::PfpGen, &sys);
            let mut outcome = compare("pfpgen", gen_r, lp.clone().map(|l| intersect_all(&l)));
            if outcome.is_ok() {
                let (_, rfp) = enc(DerivedKind::Rfp, &sys);
                outcome = compare("rfp", rfp, lp.map(|l| union_all(k, &l)));
            }
            (f, outcome)
        }
        Law::OscSquared => {
            let sys = gen::system(rng, BodyClass::Negative);
            let (f, mu) = enc(DerivedKind::OpMu, &sys);
            let mut outcome = match prefix_and_loop(&ev, &sys) {
                Ok((_, l)) if l.len() <= 2 => Ok(()),
                Ok((_, l)) => Err(format!("loop length {} for an anti-monotone body", l.len())),
                Err(e) => Err(e.to_string()),
            };
            if outcome.is_ok() {
                outcome = compare("opmu", mu, squared_fixpoint(&ev, &sys, false));
            }
            if outcome.is_ok() {
                let (_, nu) = enc(DerivedKind::OpNu, &sys);
                outcome = compare("opnu", nu, squared_fixpoint(&ev, &sys, true));
            }
            (f, outcome)
        }
        Law::IdMonotone => {
            let sys = gen::system(rng, BodyClass::Positive);
            let (f, r) = enc(DerivedKind::Id, &sys);
            (f, compare("id", r, knaster_tarski(&ev, &sys)))
        }
        Law::Thm1Roundtrip | Law::Thm1NextUntil => {
            let sys = gen::simultaneous_system(rng);
            let fragment = if law == Law::Thm1Roundtrip {
                HeaderFragment::EventuallyAlways
            } else {
                HeaderFragment::NextUntil
            };
            let h = gen::header(rng, &sys, fragment, 3);
            let (f, vars) = gen::iteration_query(h, sys);
            let outcome = match translate::translate_to_pfp(&f) {
                Ok(g) if !translate::is_temporal_free(&g) => {
                    Err(format!("output not temporal-free: {g}"))
                }
                Ok(g) => compare("pfp translation", ev.query(&g, &vars), ev.query(&f, &vars))
                    .map_err(|e| format!("{e}\ntranslation: {g}")),
                Err(e) => Err(format!("translation failed: {e}")),
            };
            (f.to_string(), outcome)
        }
        Law::LfpRoundtrip => {
            let sys = gen::system(rng, BodyClass::Positive);
            let h = gen::header(rng, &sys, HeaderFragment::Full, 3);
            let (f, vars) = gen::iteration_query(h, sys);
            let outcome = match translate::translate_monotone_to_lfp(&f) {
                Ok((g, aux)) => compare(
                    "lfp translation",
                    translate::eval_with_aux(&structure, &g, &vars, &aux),
                    ev.query(&f, &vars),
                )
                .map_err(|e| format!("{e}\ntranslation: {g}")),
                Err(e) => Err(format!("translation failed: {e}")),
            };
            (f.to_string(), outcome)
        }
        Law::UnrollInvariance | Law::FgDuality | Law::UntilUnfolding | Law::XDepthLocality => {
            let lasso = gen::lasso(rng, structure.domain_size());
            let k = lasso.preds()[0].1;
            let sys = IterationSystem::single_owned(
                "R",
                &gen::def_vars(k),
                Formula::atom_vars("R", &gen::def_vars(k)),
            );
            let fragment = if law == Law::XDepthLocality {
                HeaderFragment::NextOnly
            } else {
                HeaderFragment::Full
            };
            let psi = gen::header(rng, &sys, fragment, 3);
            let vars = header_vars(&psi);
            let at0 = |h: &Formula, l: &crate::iteration::Lasso| ev.eval_lasso(l, h, &vars);
            let outcome = match law {
                Law::UnrollInvariance => {
                    compare("unrolled", at0(&psi, &lasso.unrolled()), at0(&psi, &lasso))
                }
                Law::XDepthLocality => {
                    let d = next_depth(&psi);
                    let mut long = lasso.clone();
                    while long.len() <= d {
                        long = long.unrolled();
                    }
                    compare(
                        &format!("truncated after X-depth {d}"),
                        at0(&psi, &long.truncated(d + 1)),
                        at0(&psi, &lasso),
                    )
                }
                Law::FgDuality => {
                    let not = Formula::not;
                    compare(
                        "!F psi vs G !psi",
                        at0(&not(Formula::eventually(psi.clone())), &lasso),
                        at0(&Formula::always(not(psi.clone())), &lasso),
                    )
                    .and_then(|_| {
                        compare(
                            "!X psi vs X !psi",
                            at0(&not(Formula::next(psi.clone())), &lasso),
                            at0(&Formula::next(not(psi.clone())), &lasso),
                        )
                    })
                }
                _ => {
                    // psi U chi at every position: shift the lasso so each
                    // position in turn becomes position 0.
                    let chi = gen::header(rng, &sys, HeaderFragment::Full, 2);
                    let mut cols = vars.clone();
                    for v in header_vars(&chi) {
                        if !cols.contains(&v) {
                            cols.push(v);
                        }
                    }
                    let until = Formula::until(psi.clone(), chi.clone());
                    let unfolded = Formula::or(
                        chi.clone(),
                        Formula::and(psi.clone(), Formula::next(until.clone())),
                    );
                    (0..lasso.len())
                        .map(|i| rotate(&lasso, i))
                        .try_for_each(|l| {
                            compare(
                                "U unfolding",
                                ev.eval_lasso(&l, &until, &cols),
                                ev.eval_lasso(&l, &unfolded, &cols),
                            )
                        })
                }
            };
            let text = format!("lasso {:?}; header {psi}", lasso_summary(&lasso));
            (text, outcome)
        }
        Law::EngineBounds => {
            let sys = gen::system(rng, BodyClass::Positive);
            let k = sys.defs[0].arity();
            let n = structure.domain_size();
            let outcome = match (ev.iterate(&sys), ev.iterate(&sys)) {
                (Ok(a), Ok(b)) if a != b => Err("two runs differ".to_string()),
                (Ok(a), Ok(_)) if a.loop_len() != 1 => Err(format!("loop length {}", a.loop_len())),
                (Ok(a), Ok(_)) if a.len() > n.pow(k as u32) + 1 => {
                    Err(format!("{} stages for n={n}, k={k}", a.len()))
                }
                (Ok(a), Ok(_)) => {
                    let increasing = a.stages().windows(2).all(|w| w[0][0].is_subset(&w[1][0]));
                    if increasing {
                        Ok(())
                    } else {
                        Err("stages not increasing".to_string())
                    }
                }
                (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
            };
            (sys.defs[0].body.to_string(), outcome)
        }
        Law::ParserRoundtrip => {
            let f = gen::any_formula(rng, 5);
            let sig = parse_structure(gen::ANY_FORMULA_SIGNATURE).expect("fixed signature");
            let text = f.to_string();
            let outcome = match ParseOptions::with_signature(sig.signature()).parse(&text) {
                Ok(g) if g == f => Ok(()),
                Ok(g) => Err(format!("reparsed as {g}")),
                Err(e) => Err(format!("does not reparse: {e}")),
            };
            (text, outcome)
        }
        Law::StructureRoundtrip => {
            let s = gen::rich_structure(rng, cfg.max_domain);
            let text = s.to_string();
            let outcome = match parse_structure(&text) {
                Ok(t) if t == s => Ok(()),
                Ok(_) => Err("reparsed structure differs".to_string()),
                Err(e) => Err(format!("does not reparse: {e}")),
            };
            return Instance {
                structure: s,
                formula: String::new(),
                outcome,
            };
        }
    };
    Instance {
        structure,
        formula,
        outcome,
    }
}

/// Largest number of nested `X` on any path through `f`.
fn next_depth(f: &Formula) -> usize {
    match f {
        Formula::Next(a) => 1 + next_depth(a),
        Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => next_depth(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            next_depth(a).max(next_depth(b))
        }
        _ => 0,
    }
}

/// The lasso that starts at position `i` of `l`.
fn rotate(l: &crate::iteration::Lasso, i: usize) -> crate::iteration::Lasso {
    if i == 0 {
        return l.clone();
    }
    let mut stages: Vec<_> = l.stages()[i.min(l.prefix_len())..].to_vec();
    let mut prefix = l.prefix_len().saturating_sub(i);
    if i > l.prefix_len() {
        // Inside the loop: rotate the loop itself.
        let off = i - l.prefix_len();
        stages.rotate_left(off);
        prefix = 0;
    } else {
        stages = l.stages()[i..].to_vec();
    }
    crate::iteration::Lasso::from_parts(l.preds().to_vec(), stages, prefix)
        .expect("rotation keeps a loop")
}

fn lasso_summary(l: &crate::iteration::Lasso) -> (usize, Vec<String>) {
    (
        l.prefix_len(),
        l.stages().iter().map(|s| show(&s[0])).collect(),
    )
}

/// A single-definition system with a body given as text.
pub fn parse_system(body: &str, pred: &str, vars: &[&str]) -> Result<IterationSystem> {
    Ok(IterationSystem::single(pred, vars, parse_formula(body)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_on_fixed_instances() {
        let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
        let ev = Evaluator::new(&s);
        let tc = parse_system("E(x,y) | exists z. (E(x,z) & R(z,y))", "R", &["x", "y"]).unwrap();
        assert_eq!(knaster_tarski(&ev, &tc).unwrap().len(), 3);
        let two = parse_structure("domain 2").unwrap();
        let ev2 = Evaluator::new(&two);
        let flip = parse_system("!R(x)", "R", &["x"]).unwrap();
        assert!(partial_limit(&ev2, &flip).unwrap().is_empty());
        assert!(squared_fixpoint(&ev2, &flip, false).unwrap().is_empty());
        assert_eq!(squared_fixpoint(&ev2, &flip, true).unwrap().len(), 2);
        assert_eq!(inflationary_limit(&ev2, &flip).unwrap().len(), 2);
    }

    #[test]
    fn rotation_visits_every_suffix() {
        let l = gen::lasso(&mut gen::rng(1), 2);
        for i in 0..l.len() {
            let r = rotate(&l, i);
            for j in 0..12 {
                assert_eq!(r.stage_at(j), l.stage_at(i + j));
            }
        }
    }

    #[test]
    fn small_runs_pass() {
        let cfg = LawConfig {
            count: 10,
            max_domain: 3,
            ..LawConfig::default()
        };
        for law in Law::ALL {
            let r = run(law, &cfg);
            assert!(r.ok(), "{r}");
        }
    }

    #[test]
    fn swapped_headers_are_caught() {
        let cfg = LawConfig {
            count: 30,
            rewrite: RewriteOptions {
                swap_eventually_always: true,
            },
            ..LawConfig::default()
        };
        let r = run(Law::LfpDirect, &cfg);
        assert!(!r.ok());
        assert!(r.first_failure.is_some());
    }
}
