//! Expansion of the derived fixpoint operators into iteration constructs.
//!
//! Each derived node `kind[R(x): phi; ...](t)` becomes
//! `[header][iter ...](t)` with a kind-specific temporal header over fresh
//! column variables. The target predicate is the first definition.

use crate::error::{Error, Result};
use crate::formula::{
    map_children, polarity, Definition, DerivedKind, Formula, FreshNames, IterationSystem,
    Polarity, Term,
};

/// Switches used to build deliberately wrong expansions for mutation tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewriteOptions {
    /// Exchange `F` and `G` in every generated header.
    pub swap_eventually_always: bool,
}

/// Replaces every derived node, at any depth, by its iteration encoding.
pub fn expand(f: &Formula) -> Result<Formula> {
    expand_with(f, RewriteOptions::default())
}

pub fn expand_with(f: &Formula, opts: RewriteOptions) -> Result<Formula> {
    let mut rw = Rewriter {
        fresh: FreshNames::avoiding(f),
        opts,
    };
    rw.formula(f)
}

struct Rewriter {
    fresh: FreshNames,
    opts: RewriteOptions,
}

fn atom(p: &str, vars: &[String]) -> Formula {
    Formula::atom_vars(p, vars)
}

fn swap_fg(f: &Formula) -> Formula {
    match f {
        Formula::Eventually(a) => Formula::always(swap_fg(a)),
        Formula::Always(a) => Formula::eventually(swap_fg(a)),
        _ => map_children(f, swap_fg),
    }
}

impl Rewriter {
    fn formula(&mut self, f: &Formula) -> Result<Formula> {
        match f {
            Formula::Iter {
                header,
                system,
                args,
            } => Ok(Formula::iter(
                self.formula(header)?,
                self.system(system)?,
                args.clone(),
            )),
            Formula::Derived { kind, system, args } => {
                let (header, system) = self.derived(*kind, system)?;
                let header = if self.opts.swap_eventually_always {
                    swap_fg(&header)
                } else {
                    header
                };
                Ok(Formula::iter(header, system, args.clone()))
            }
            _ => {
                let mut err = None;
                let out = map_children(f, |c| match self.formula(c) {
                    Ok(g) => g,
                    Err(e) => {
                        err.get_or_insert(e);
                        c.clone()
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
        }
    }

    fn system(&mut self, system: &IterationSystem) -> Result<IterationSystem> {
        let defs = system
            .defs
            .iter()
            .map(|d| {
                Ok(Definition {
                    pred: d.pred.clone(),
                    vars: d.vars.clone(),
                    body: self.formula(&d.body)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(IterationSystem { defs })
    }

    fn require(
        &self,
        kind: DerivedKind,
        system: &IterationSystem,
        ok: fn(Polarity) -> bool,
        required: Polarity,
    ) -> Result<()> {
        for d in &system.defs {
            for p in system.preds() {
                let found = polarity(&d.body, p);
                if !ok(found) {
                    return Err(Error::Polarity {
                        construct: kind.keyword().to_string(),
                        pred: p.to_string(),
                        found,
                        required,
                    });
                }
            }
        }
        Ok(())
    }

    /// Header and (unexpanded) system for one derived node.
    fn derived(
        &mut self,
        kind: DerivedKind,
        system: &IterationSystem,
    ) -> Result<(Formula, IterationSystem)> {
        if system.defs.is_empty() {
            return Err(Error::IllFormed("empty system".into()));
        }
        if kind.single_only() && system.defs.len() != 1 {
            return Err(Error::IllFormed(format!(
                "`{kind}` takes a single definition"
            )));
        }
        let target = system.defs[0].pred.clone();
        let k = system.defs[0].arity();
        let z = self.fresh.fresh_vec("z", k);
        let r_z = atom(&target, &z);
        let simultaneous = system.defs.len() > 1;

        let (header, system) = match kind {
            DerivedKind::Lfp => {
                self.require(kind, system, Polarity::is_monotone, Polarity::Positive)?;
                (Formula::eventually(r_z), system.clone())
            }
            DerivedKind::Ifp => {
                let defs = system
                    .defs
                    .iter()
                    .map(|d| Definition {
                        pred: d.pred.clone(),
                        vars: d.vars.clone(),
                        body: Formula::or(atom(&d.pred, &d.vars), d.body.clone()),
                    })
                    .collect();
                (Formula::eventually(r_z), IterationSystem { defs })
            }
            DerivedKind::Pfp => {
                let v = self.fresh.fresh_vec("v", k);
                let stable = Formula::forall_all(
                    &v,
                    Formula::iff(atom(&target, &v), Formula::next(atom(&target, &v))),
                );
                // With several definitions only the target has to settle,
                // and it must stay settled, not just pause for one step.
                let stable = if simultaneous {
                    Formula::always(stable)
                } else {
                    stable
                };
                (
                    Formula::eventually(Formula::and(r_z, stable)),
                    system.clone(),
                )
            }
            DerivedKind::PfpGen => (Formula::eventually(Formula::always(r_z)), system.clone()),
            DerivedKind::PfpCup => (Formula::eventually(r_z), system.clone()),
            DerivedKind::PfpCap => (Formula::always(r_z), system.clone()),
            DerivedKind::Rfp => (Formula::always(Formula::eventually(r_z)), system.clone()),
            DerivedKind::OpMu | DerivedKind::OpNu => {
                self.require(kind, system, Polarity::is_antitone, Polarity::Negative)?;
                let y = self.fresh.fresh_vec("y", k);
                let r_y = atom(&target, &y);
                let period2 = Formula::forall_all(
                    &y,
                    Formula::iff(r_y.clone(), Formula::next(Formula::next(r_y.clone()))),
                );
                let drop = if kind == DerivedKind::OpNu {
                    Formula::and(r_y.clone(), Formula::next(Formula::not(r_y.clone())))
                } else {
                    Formula::and(Formula::not(r_y.clone()), Formula::next(r_y.clone()))
                };
                let fixed = Formula::forall_all(&y, Formula::iff(r_y.clone(), Formula::next(r_y)));
                let header = Formula::eventually(Formula::conj(vec![
                    r_z,
                    period2,
                    Formula::or(Formula::exists_all(&y, drop), fixed),
                ]));
                (header, system.clone())
            }
            DerivedKind::Id => return self.id(system, &z),
        };
        Ok((header, self.system(&system)?))
    }

    /// Lower and negated-upper approximation system for a non-monotone
    /// definition, read through a header that asks for a common limit.
    fn id(&mut self, system: &IterationSystem, z: &[String]) -> Result<(Formula, IterationSystem)> {
        let d = &system.defs[0];
        let p = d.pred.clone();
        let body = desugar(&d.body);
        let pl = self.fresh.fresh(&format!("{}l", p.trim_start_matches('_')));
        let pu = self.fresh.fresh(&format!("{}u", p.trim_start_matches('_')));
        let lower_body =
            replace_negative(&body, &p, &|args| Formula::atom_terms(&pl, args.to_vec()))?;
        let upper_body = replace_negative(&body, &p, &|args| {
            Formula::not(Formula::atom_terms(&pu, args.to_vec()))
        })?;
        let y = self.fresh.fresh_vec("y", d.arity());
        let y_terms: Vec<Term> = y.iter().map(|v| Term::Var(v.clone())).collect();
        let lfp = |b: Formula| {
            Formula::derived(
                DerivedKind::Lfp,
                IterationSystem::new(vec![Definition {
                    pred: p.clone(),
                    vars: d.vars.clone(),
                    body: b,
                }]),
                y_terms.clone(),
            )
        };
        let generated = IterationSystem::new(vec![
            Definition {
                pred: pu.clone(),
                vars: y.clone(),
                body: Formula::not(lfp(lower_body)),
            },
            Definition {
                pred: pl.clone(),
                vars: y.clone(),
                body: lfp(upper_body),
            },
        ]);
        let w = self.fresh.fresh_vec("y", d.arity());
        let header = Formula::eventually(Formula::and(
            atom(&pl, z),
            Formula::forall_all(&w, Formula::iff(atom(&pl, &w), Formula::not(atom(&pu, &w)))),
        ));
        Ok((header, self.system(&generated)?))
    }
}

/// Rewrites `->` and `<->` into `!`, `&`, `|` so every occurrence has a
/// definite sign.
pub fn desugar(f: &Formula) -> Formula {
    match f {
        Formula::Implies(a, b) => Formula::or(Formula::not(desugar(a)), desugar(b)),
        Formula::Iff(a, b) => {
            let (a, b) = (desugar(a), desugar(b));
            Formula::and(
                Formula::or(Formula::not(a.clone()), b.clone()),
                Formula::or(Formula::not(b), a),
            )
        }
        Formula::Iter {
            header,
            system,
            args,
        } => Formula::iter(desugar(header), desugar_system(system), args.clone()),
        Formula::Derived { kind, system, args } => {
            Formula::derived(*kind, desugar_system(system), args.clone())
        }
        _ => map_children(f, desugar),
    }
}

fn desugar_system(system: &IterationSystem) -> IterationSystem {
    IterationSystem {
        defs: system
            .defs
            .iter()
            .map(|d| Definition {
                pred: d.pred.clone(),
                vars: d.vars.clone(),
                body: desugar(&d.body),
            })
            .collect(),
    }
}

/// Replaces the negative occurrences of `p` in a desugared formula.
fn replace_negative(f: &Formula, p: &str, repl: &dyn Fn(&[Term]) -> Formula) -> Result<Formula> {
    neg_rec(f, p, repl, true)
}

fn neg_rec(
    f: &Formula,
    p: &str,
    repl: &dyn Fn(&[Term]) -> Formula,
    positive: bool,
) -> Result<Formula> {
    match f {
        Formula::Atom { pred, args } if pred == p && !positive => Ok(repl(args)),
        Formula::Not(a) => Ok(Formula::not(neg_rec(a, p, repl, !positive)?)),
        Formula::Derived {
            kind: DerivedKind::Lfp,
            system,
            args,
        } if !system.binds(p) => {
            let defs = system
                .defs
                .iter()
                .map(|d| {
                    Ok(Definition {
                        pred: d.pred.clone(),
                        vars: d.vars.clone(),
                        body: neg_rec(&d.body, p, repl, positive)?,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Formula::derived(
                DerivedKind::Lfp,
                IterationSystem { defs },
                args.clone(),
            ))
        }
        Formula::Iter { .. } | Formula::Derived { .. } => {
            if crate::formula::mentions_pred(f, p) {
                Err(Error::IllFormed(format!(
                    "`id` cannot split the occurrences of {p} inside a nested construct"
                )))
            } else {
                Ok(f.clone())
            }
        }
        _ => {
            let mut err = None;
            let out = map_children(f, |c| match neg_rec(c, p, repl, positive) {
                Ok(g) => g,
                Err(e) => {
                    err.get_or_insert(e);
                    c.clone()
                }
            });
            err.map_or(Ok(out), Err)
        }
    }
}
