//! Monotone iteration constructs to least fixed points.
//!
//! Stages of a monotone iteration are named by tuples: a tuple of rank `r`
//! stands for stage `r`, and the start index `s` stands for stage 0, where
//! the iteration predicate is empty. Time is then simulated with two
//! auxiliary relations per construct, stage comparison `__leq_R(a,b)` and
//! stage successor `__next_R(a,b)`, whose interpretations are read off the
//! rank table of the iteration instead of being defined by a formula.
//!
//! The start index needs care that a plain reading of the rules misses:
//! stage 0 is not named by any tuple, so `F` at the start also checks stage
//! 0 itself, and `X` at the start falls back to stage 0 when the least fixed
//! point is empty (then every stage is empty).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::{Evaluator, DEFAULT_MAX_STEPS};
use crate::formula::{
    free_predicates, map_children, mentions_pred, polarity, replace_pred, subst_vars,
    system_params, DerivedKind, Formula, FreshNames, IterationSystem, Polarity, Term,
    RESERVED_PREFIX,
};
use crate::iteration::StageReading;
use crate::rewrite;
use crate::structure::{FiniteStructure, Relation};

/// The auxiliary relations generated for one translated iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxEntry {
    pub leq: String,
    pub next: String,
    /// Arity of the iteration predicate; both relations have twice this.
    pub arity: usize,
    /// The translated single-definition system whose ranks interpret them.
    pub system: IterationSystem,
}

/// Auxiliary relations in dependency order: an entry may mention the
/// relations of earlier entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuxSignature {
    pub entries: Vec<AuxEntry>,
    pub reading: StageReading,
}

impl AuxSignature {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .flat_map(|e| [e.leq.as_str(), e.next.as_str()])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rewrites every iteration construct of `f` (after expansion) into first
/// order logic with `lfp` and the auxiliary stage relations. Every construct
/// must have a single definition, positive in its predicate and without
/// parameters.
pub fn translate_monotone_to_lfp(f: &Formula) -> Result<(Formula, AuxSignature)> {
    let core = rewrite::expand(f)?;
    let mut t = Translator {
        fresh: FreshNames::avoiding(&core),
        aux: AuxSignature::default(),
        enclosing: Vec::new(),
    };
    let out = t.tr(&core)?;
    Ok((out, t.aux))
}

/// `s` extended with the interpretations of every auxiliary relation.
pub fn augment_structure(
    s: &FiniteStructure,
    aux: &AuxSignature,
    max_steps: usize,
) -> Result<FiniteStructure> {
    let mut out = s.clone();
    for e in &aux.entries {
        let rt = Evaluator::new(&out)
            .with_max_steps(max_steps)
            .rank_table(&e.system)?
            .with_reading(aux.reading);
        out.add_relation(&e.leq, rt.leq_relation())?;
        out.add_relation(&e.next, rt.next_relation())?;
    }
    Ok(out)
}

/// Evaluates a translated formula over `vars`, answering auxiliary atoms
/// from the rank tables of `aux`.
pub fn eval_with_aux(
    s: &FiniteStructure,
    f: &Formula,
    vars: &[String],
    aux: &AuxSignature,
) -> Result<Relation> {
    let known: Vec<&str> = aux.names().collect();
    for p in free_predicates(f) {
        if p.starts_with(RESERVED_PREFIX)
            && s.relation(&p).is_none()
            && !known.contains(&p.as_str())
        {
            return Err(Error::MissingAux(p));
        }
    }
    let augmented = augment_structure(s, aux, DEFAULT_MAX_STEPS)?;
    Evaluator::new(&augmented).query(f, vars)
}

struct Translator {
    fresh: FreshNames,
    aux: AuxSignature,
    /// Iteration predicates of the constructs being translated.
    enclosing: Vec<String>,
}

/// What the translation of one header refers to.
struct Ctx<'a> {
    pred: &'a str,
    vars: &'a [String],
    body: &'a Formula,
    leq: &'a str,
    next: &'a str,
}

fn terms(vars: &[String]) -> Vec<Term> {
    vars.iter().map(|v| Term::Var(v.clone())).collect()
}

fn pair(name: &str, a: &[Term], b: &[String]) -> Formula {
    let mut args = a.to_vec();
    args.extend(terms(b));
    Formula::atom_terms(name, args)
}

/// `->`, `<->`, `|`, `exists` and `G` written with `!`, `&`, `forall`, `F`.
fn dualize(f: &Formula) -> Formula {
    let n = Formula::not;
    match f {
        Formula::Or(a, b) => n(Formula::and(n(dualize(a)), n(dualize(b)))),
        Formula::Implies(a, b) => n(Formula::and(dualize(a), n(dualize(b)))),
        Formula::Iff(a, b) => {
            let (a, b) = (dualize(a), dualize(b));
            Formula::and(
                n(Formula::and(a.clone(), n(b.clone()))),
                n(Formula::and(b, n(a))),
            )
        }
        Formula::Exists(v, a) => n(Formula::forall(v, n(dualize(a)))),
        Formula::Always(a) => n(Formula::eventually(n(dualize(a)))),
        _ => map_children(f, dualize),
    }
}

impl Translator {
    fn tr(&mut self, f: &Formula) -> Result<Formula> {
        match f {
            Formula::Iter {
                header,
                system,
                args,
            } => self.iter(header, system, args),
            Formula::Derived { .. } => Err(Error::IllFormed("derived node after expansion".into())),
            _ => {
                let mut err = None;
                let out = map_children(f, |c| match self.tr(c) {
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

    fn iter(
        &mut self,
        header: &Formula,
        system: &IterationSystem,
        args: &[Term],
    ) -> Result<Formula> {
        let [def] = system.defs.as_slice() else {
            return Err(Error::UnsupportedHeader(
                "simultaneous systems have no stage ranks".into(),
            ));
        };
        let found = polarity(&def.body, &def.pred);
        if !found.is_monotone() {
            return Err(Error::Polarity {
                construct: "stage comparison".into(),
                pred: def.pred.clone(),
                found,
                required: Polarity::Positive,
            });
        }
        if !system_params(system).is_empty() {
            return Err(Error::UnsupportedHeader(format!(
                "body of {} has parameters, so its stages are not fixed",
                def.pred
            )));
        }
        if let Some(p) = self.enclosing.iter().find(|p| mentions_pred(&def.body, p)) {
            return Err(Error::UnsupportedHeader(format!(
                "body of {} reads the enclosing iteration predicate {p}",
                def.pred
            )));
        }
        self.enclosing.push(def.pred.clone());
        let body = self.tr(&def.body);
        self.enclosing.pop();
        let body = body?;

        let base = def.pred.trim_start_matches('_');
        let leq = self.fresh.fresh(&format!("leq_{base}"));
        let next = self.fresh.fresh(&format!("next_{base}"));
        self.aux.entries.push(AuxEntry {
            leq: leq.clone(),
            next: next.clone(),
            arity: def.arity(),
            system: IterationSystem::single_owned(&def.pred, &def.vars, body.clone()),
        });

        let cx = Ctx {
            pred: &def.pred,
            vars: &def.vars,
            body: &body,
            leq: &leq,
            next: &next,
        };
        let translated = self.idx(&cx, &dualize(header), None)?;
        let zs = crate::formula::header_vars(header);
        let map: BTreeMap<String, Term> = zs.into_iter().zip(args.iter().cloned()).collect();
        Ok(subst_vars(&translated, &map, &mut self.fresh))
    }

    fn lfp(&self, cx: &Ctx, args: Vec<Term>) -> Formula {
        Formula::derived(
            DerivedKind::Lfp,
            IterationSystem::single_owned(cx.pred, cx.vars, cx.body.clone()),
            args,
        )
    }

    /// The first stage: the body with the predicate read as empty.
    fn first_stage(&mut self, cx: &Ctx, at: &[String]) -> Formula {
        let empty = replace_pred(
            cx.body,
            cx.pred,
            &|_| Formula::falsum(),
            &Default::default(),
            &mut self.fresh,
        );
        let map: BTreeMap<String, Term> = cx.vars.iter().cloned().zip(terms(at)).collect();
        subst_vars(&empty, &map, &mut self.fresh)
    }

    /// `a < b` in stage order.
    fn before(cx: &Ctx, a: &[String], b: &[String]) -> Formula {
        Formula::and(
            pair(cx.leq, &terms(a), b),
            Formula::not(pair(cx.leq, &terms(b), a)),
        )
    }

    /// Translation of a dualized header at the start (`None`) or at the
    /// stage named by a tuple of variables.
    fn idx(&mut self, cx: &Ctx, f: &Formula, at: Option<&[String]>) -> Result<Formula> {
        let k = cx.vars.len();
        Ok(match f {
            Formula::Atom { pred, args } if pred == cx.pred => match at {
                None => Formula::falsum(),
                Some(u) => Formula::and(pair(cx.leq, args, u), self.lfp(cx, args.clone())),
            },
            Formula::Atom { .. } | Formula::Eq(..) => f.clone(),
            Formula::Not(a) => Formula::not(self.idx(cx, a, at)?),
            Formula::And(a, b) => Formula::and(self.idx(cx, a, at)?, self.idx(cx, b, at)?),
            Formula::Forall(v, a) => Formula::forall(v, self.idx(cx, a, at)?),
            Formula::Next(a) => match at {
                None => {
                    let u = self.fresh.fresh_vec("u", k);
                    let first = self.first_stage(cx, &u);
                    let inner = self.idx(cx, a, Some(&u))?;
                    let stay = self.idx(cx, a, None)?;
                    Formula::or(
                        Formula::exists_all(&u, Formula::and(first.clone(), inner)),
                        Formula::and(Formula::not(Formula::exists_all(&u, first)), stay),
                    )
                }
                Some(u) => {
                    let u2 = self.fresh.fresh_vec("u", k);
                    let inner = self.idx(cx, a, Some(&u2))?;
                    Formula::exists_all(&u2, Formula::and(pair(cx.next, &terms(u), &u2), inner))
                }
            },
            Formula::Eventually(a) => match at {
                None => {
                    let u = self.fresh.fresh_vec("u", k);
                    let now = self.idx(cx, a, None)?;
                    let later = self.idx(cx, a, Some(&u))?;
                    Formula::or(
                        now,
                        Formula::exists_all(&u, Formula::and(self.lfp(cx, terms(&u)), later)),
                    )
                }
                Some(u) => {
                    let u2 = self.fresh.fresh_vec("u", k);
                    let inner = self.idx(cx, a, Some(&u2))?;
                    Formula::exists_all(&u2, Formula::and(pair(cx.leq, &terms(u), &u2), inner))
                }
            },
            Formula::Until(a, b) => match at {
                None => {
                    let u = self.fresh.fresh_vec("u", k);
                    let u2 = self.fresh.fresh_vec("u", k);
                    let b_now = self.idx(cx, b, None)?;
                    let a_now = self.idx(cx, a, None)?;
                    let b_u = self.idx(cx, b, Some(&u))?;
                    let a_u2 = self.idx(cx, a, Some(&u2))?;
                    let guard =
                        Formula::forall_all(&u2, Formula::implies(Self::before(cx, &u2, &u), a_u2));
                    Formula::or(
                        b_now,
                        Formula::and(
                            a_now,
                            Formula::exists_all(
                                &u,
                                Formula::conj(vec![self.lfp(cx, terms(&u)), b_u, guard]),
                            ),
                        ),
                    )
                }
                Some(u) => {
                    let u2 = self.fresh.fresh_vec("u", k);
                    let u3 = self.fresh.fresh_vec("u", k);
                    let b_u2 = self.idx(cx, b, Some(&u2))?;
                    let a_u3 = self.idx(cx, a, Some(&u3))?;
                    let between =
                        Formula::and(pair(cx.leq, &terms(u), &u3), Self::before(cx, &u3, &u2));
                    Formula::exists_all(
                        &u2,
                        Formula::conj(vec![
                            pair(cx.leq, &terms(u), &u2),
                            b_u2,
                            Formula::forall_all(&u3, Formula::implies(between, a_u3)),
                        ]),
                    )
                }
            },
            Formula::Iter { .. } => {
                if mentions_pred(f, cx.pred) {
                    return Err(Error::UnsupportedHeader(format!(
                        "nested construct reads {} inside its header",
                        cx.pred
                    )));
                }
                self.tr(f)?
            }
            _ => return Err(Error::UnsupportedHeader(format!("no rule for `{f}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::{parse_structure, Assignment};
    use crate::translate::is_temporal_free;

    const TC: &str = "E(x,y) | exists z. (E(x,z) & R(z,y))";
    const PATH: &str = "domain 3\nrel E/2 = { (0,1) (1,2) }";

    fn round_trip(structure: &str, q: &str) -> Relation {
        let s = parse_structure(structure).unwrap();
        let f = parse_formula(q).unwrap();
        let (g, aux) = translate_monotone_to_lfp(&f).unwrap();
        assert!(is_temporal_free(&g), "{g}");
        let ev = Evaluator::new(&s);
        let (vars, direct) = ev.query_free(&f).unwrap();
        assert_eq!(
            eval_with_aux(&s, &g, &vars, &aux).unwrap(),
            direct,
            "{q}\n=> {g}"
        );
        direct
    }

    fn rel2(ts: &[[usize; 2]]) -> Relation {
        Relation::collect_arity(2, ts.iter().map(|t| t.to_vec()))
    }

    #[test]
    fn eventually_is_tc() {
        let r = round_trip(PATH, &format!("[F R(z1,z2)][iter R(x,y): {TC}](a,b)"));
        assert_eq!(r, rel2(&[[0, 1], [1, 2], [0, 2]]));
    }

    #[test]
    fn stage_zero_is_empty() {
        let r = round_trip(PATH, &format!("[R(z1,z2)][iter R(x,y): {TC}](a,b)"));
        assert!(r.is_empty());
    }

    #[test]
    fn next_reads_first_stage() {
        let r = round_trip(PATH, &format!("[X R(z1,z2)][iter R(x,y): {TC}](a,b)"));
        assert_eq!(r, rel2(&[[0, 1], [1, 2]]));
    }

    #[test]
    fn more_headers() {
        for h in [
            "X X R(z1,z2)",
            "X X X X R(z1,z2)",
            "G (R(z1,z2) -> X R(z1,z2))",
            "!R(z1,z2) U R(z1,z2)",
            "(exists w. R(z1,w)) U R(z1,z2)",
            "F (R(z1,z2) & !X X R(z2,z1))",
            "F G R(z1,z2)",
            "E(z1,z2) & X !R(z1,z2)",
        ] {
            round_trip(PATH, &format!("[{h}][iter R(x,y): {TC}](a,b)"));
        }
    }

    #[test]
    fn empty_least_fixed_point() {
        let s = "domain 2\nrel P/1 = { }";
        round_trip(s, "[X !R(z)][iter R(x): P(x) & R(x)](a)");
        round_trip(s, "[F !R(z)][iter R(x): P(x)](a)");
        round_trip(s, "[!R(z) U !R(z)][iter R(x): P(x)](a)");
    }

    #[test]
    fn aux_atoms_follow_ranks() {
        let s = parse_structure(PATH).unwrap();
        let f = parse_formula(&format!("[F R(z1,z2)][iter R(x,y): {TC}](a,b)")).unwrap();
        let (_, aux) = translate_monotone_to_lfp(&f).unwrap();
        let leq = aux.entries[0].leq.clone();
        let aug = augment_structure(&s, &aux, DEFAULT_MAX_STEPS).unwrap();
        let atom = crate::formula::ParseOptions::with_signature(aug.signature())
            .allow_reserved(true)
            .parse(&format!("{leq}(a,b,c,d)"))
            .unwrap();
        let ev = Evaluator::new(&aug);
        let at = |t: [usize; 4]| {
            Assignment::new()
                .with("a", t[0])
                .with("b", t[1])
                .with("c", t[2])
                .with("d", t[3])
        };
        let env = Default::default();
        assert!(ev.eval_fo(&env, &atom, &at([0, 1, 0, 2])).unwrap());
        assert!(!ev.eval_fo(&env, &atom, &at([0, 2, 0, 1])).unwrap());
        assert!(!ev.eval_fo(&env, &atom, &at([2, 0, 0, 1])).unwrap());
    }

    #[test]
    fn missing_aux_is_reported() {
        let s = parse_structure(PATH).unwrap();
        let f = crate::formula::ParseOptions::default()
            .allow_reserved(true)
            .parse("__leq_R0(a,b,a,b)")
            .unwrap();
        let vars = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            eval_with_aux(&s, &f, &vars, &AuxSignature::default()),
            Err(Error::MissingAux("__leq_R0".into()))
        );
    }

    #[test]
    fn conservative_on_first_order_input() {
        let f = parse_formula("exists y. E(x,y) & !E(y,x)").unwrap();
        let (g, aux) = translate_monotone_to_lfp(&f).unwrap();
        assert!(aux.is_empty());
        assert_eq!(g, f);
    }

    #[test]
    fn rejects_mixed_body() {
        let f = parse_formula("[F R(z)][iter R(x): R(x) & !R(x)](a)").unwrap();
        assert!(matches!(
            translate_monotone_to_lfp(&f),
            Err(Error::Polarity { .. })
        ));
    }
}
