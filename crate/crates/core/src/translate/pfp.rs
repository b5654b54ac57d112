//! Iteration constructs to simultaneous partial fixed points.
//!
//! A header is translated by recursion on its shape while the iteration
//! system stays fixed. Boolean connectives and quantifiers commute with the
//! construct. A non-temporal header is read at stage 0, where every
//! iteration predicate is empty. `F a` collects `a` over all stages in an
//! inflationary accumulator that runs alongside the original system. `X`
//! shifts the stage by substituting each body for its predicate, and `a U b`
//! uses a second accumulator recording where `a` has failed.

use std::cell::RefCell;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::formula::{
    free_vars_ordered, is_temporal, map_children, replace_pred, subst_vars, system_params,
    Definition, DerivedKind, Formula, FreshNames, IterationSystem, Term,
};
use crate::rewrite;

/// Rewrites `f` into first-order logic with `pfp` as the only fixpoint
/// construct. Derived constructs are expanded first.
pub fn translate_to_pfp(f: &Formula) -> Result<Formula> {
    let core = rewrite::expand(f)?;
    let mut t = Translator {
        fresh: FreshNames::avoiding(&core),
    };
    t.star(&core)
}

struct Translator {
    fresh: FreshNames,
}

fn unsupported(what: &str, header: &Formula) -> Error {
    Error::UnsupportedHeader(format!("{what} in `{header}`"))
}

impl Translator {
    fn star(&mut self, f: &Formula) -> Result<Formula> {
        match f {
            Formula::Iter {
                header,
                system,
                args,
            } => {
                let system = self.star_system(system)?;
                let vars = crate::formula::header_vars(header);
                let bind: BTreeMap<String, Term> =
                    vars.into_iter().zip(args.iter().cloned()).collect();
                self.star_iter(header, &system, &bind)
            }
            Formula::Derived { .. } => Err(Error::IllFormed("derived node after expansion".into())),
            _ => {
                let mut err = None;
                let out = map_children(f, |c| match self.star(c) {
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

    fn star_system(&mut self, system: &IterationSystem) -> Result<IterationSystem> {
        let defs = system
            .defs
            .iter()
            .map(|d| {
                Ok(Definition {
                    pred: d.pred.clone(),
                    vars: d.vars.clone(),
                    body: self.star(&d.body)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(IterationSystem { defs })
    }

    /// Translation of `[psi][system](bind)`, where `bind` maps every free
    /// variable of `psi` to the term it stands for. `system` is already
    /// translated.
    fn star_iter(
        &mut self,
        psi: &Formula,
        system: &IterationSystem,
        bind: &BTreeMap<String, Term>,
    ) -> Result<Formula> {
        if !is_temporal(psi) {
            let mut g = psi.clone();
            for p in system.preds() {
                g = replace_pred(
                    &g,
                    p,
                    &|_| Formula::falsum(),
                    &Default::default(),
                    &mut self.fresh,
                );
            }
            let g = subst_vars(&g, bind, &mut self.fresh);
            return self.star(&g);
        }
        match psi {
            Formula::Not(a) => Ok(Formula::not(self.star_iter(a, system, bind)?)),
            Formula::And(a, b) => Ok(Formula::and(
                self.star_iter(a, system, bind)?,
                self.star_iter(b, system, bind)?,
            )),
            Formula::Or(a, b) => Ok(Formula::or(
                self.star_iter(a, system, bind)?,
                self.star_iter(b, system, bind)?,
            )),
            Formula::Implies(a, b) => Ok(Formula::implies(
                self.star_iter(a, system, bind)?,
                self.star_iter(b, system, bind)?,
            )),
            Formula::Iff(a, b) => Ok(Formula::iff(
                self.star_iter(a, system, bind)?,
                self.star_iter(b, system, bind)?,
            )),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let v2 = self.fresh.fresh(v.trim_start_matches('_'));
                let mut inner = bind.clone();
                inner.insert(v.clone(), Term::Var(v2.clone()));
                let body = self.star_iter(a, system, &inner)?;
                Ok(if matches!(psi, Formula::Exists(..)) {
                    Formula::exists(&v2, body)
                } else {
                    Formula::forall(&v2, body)
                })
            }
            Formula::Always(a) => {
                let dual = Formula::not(Formula::eventually(Formula::not((**a).clone())));
                self.star_iter(&dual, system, bind)
            }
            Formula::Eventually(a) => {
                if is_temporal(a) {
                    return Err(unsupported("`F` over a temporal operand", psi));
                }
                self.accumulate(vec![(**a).clone()], false, system, bind)
            }
            Formula::Until(a, b) => {
                if is_temporal(a) || is_temporal(b) {
                    return Err(unsupported("`U` over a temporal operand", psi));
                }
                self.accumulate(vec![(**a).clone(), (**b).clone()], true, system, bind)
            }
            Formula::Next(a) => {
                if !system_params(system).is_empty() {
                    return Err(unsupported("`X` over a system with parameters", psi));
                }
                let shifted = self.shift(a, system);
                self.star_iter(&shifted, system, bind)
            }
            _ => unreachable!("atoms and nested constructs are never temporal"),
        }
    }

    /// `psi` with every iteration predicate replaced by its body, which
    /// reads the next stage off the current one.
    fn shift(&mut self, psi: &Formula, system: &IterationSystem) -> Formula {
        let fresh = RefCell::new(std::mem::take(&mut self.fresh));
        let mut out = psi.clone();
        // All predicates are replaced at once, so the replacement bodies
        // must not be rewritten again by later rounds.
        let tags: Vec<String> = system
            .defs
            .iter()
            .map(|d| {
                fresh
                    .borrow_mut()
                    .fresh(&format!("{}next", d.pred.trim_start_matches('_')))
            })
            .collect();
        for (d, tag) in system.defs.iter().zip(&tags) {
            out = replace_pred(
                &out,
                &d.pred,
                &|args| Formula::atom_terms(tag, args.to_vec()),
                &Default::default(),
                &mut fresh.borrow_mut(),
            );
        }
        for (d, tag) in system.defs.iter().zip(&tags) {
            let repl = |args: &[Term]| {
                let map: BTreeMap<String, Term> =
                    d.vars.iter().cloned().zip(args.iter().cloned()).collect();
                subst_vars(&d.body, &map, &mut fresh.borrow_mut())
            };
            out = replace_pred(
                &out,
                tag,
                &repl,
                &Default::default(),
                &mut FreshNames::new(),
            );
        }
        self.fresh = fresh.into_inner();
        out
    }

    /// `F a` (one operand) or `a U b` (two operands) as a partial fixed
    /// point whose first definition accumulates the answer stage by stage.
    fn accumulate(
        &mut self,
        operands: Vec<Formula>,
        until: bool,
        system: &IterationSystem,
        bind: &BTreeMap<String, Term>,
    ) -> Result<Formula> {
        let mut cols = Vec::new();
        for o in &operands {
            for v in free_vars_ordered(o) {
                if !cols.contains(&v) {
                    cols.push(v);
                }
            }
        }
        let w: Vec<String> = cols
            .iter()
            .map(|c| self.fresh.fresh(c.trim_start_matches('_')))
            .collect();
        let rename: BTreeMap<String, Term> = cols
            .iter()
            .cloned()
            .zip(w.iter().map(|v| Term::Var(v.clone())))
            .collect();
        let mut ops = Vec::new();
        for o in &operands {
            let o = subst_vars(o, &rename, &mut self.fresh);
            ops.push(self.star(&o)?);
        }
        let q = self.fresh.fresh("Q");
        let q_w = Formula::atom_vars(&q, &w);
        let mut defs = Vec::new();
        if until {
            let b = ops.pop().expect("two operands");
            let a = ops.pop().expect("two operands");
            let p = self.fresh.fresh("P");
            let p_w = Formula::atom_vars(&p, &w);
            defs.push(Definition {
                pred: q.clone(),
                vars: w.clone(),
                body: Formula::or(q_w, Formula::and(Formula::not(p_w.clone()), b)),
            });
            defs.push(Definition {
                pred: p,
                vars: w.clone(),
                body: Formula::or(p_w, Formula::not(a)),
            });
        } else {
            defs.push(Definition {
                pred: q.clone(),
                vars: w.clone(),
                body: Formula::or(q_w, ops.pop().expect("one operand")),
            });
        }
        defs.extend(system.defs.iter().cloned());
        let args = cols
            .iter()
            .map(|c| bind.get(c).cloned().unwrap_or_else(|| Term::Var(c.clone())))
            .collect();
        Ok(Formula::derived(
            DerivedKind::Pfp,
            IterationSystem::new(defs),
            args,
        ))
    }
}
