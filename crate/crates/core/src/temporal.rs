//! Model checking a temporal header over the lasso of stages.
//!
//! Every subformula gets one relation per lasso position, over its own free
//! variables in first-occurrence order. Maximal non-temporal subformulas are
//! evaluated classically against the stage of that position; the temporal
//! connectives are solved as fixpoints of their one-step unfoldings, where
//! one step moves from `i` to `lasso.successor(i)`.

use crate::error::Result;
use crate::eval::{Ctx, PredEnv};
use crate::formula::{free_predicates, free_vars_ordered, is_temporal, Formula};
use crate::iteration::Lasso;
use crate::structure::{all_tuples, Relation, Tuple};

/// Per-position satisfaction of one subformula.
struct Table {
    vars: Vec<String>,
    at: Vec<Relation>,
}

/// Positions of `from` inside `to`; every variable of `from` must occur in `to`.
fn positions(from: &[String], to: &[String]) -> Vec<usize> {
    from.iter()
        .map(|v| {
            to.iter()
                .position(|w| w == v)
                .expect("subformula variables are a subset")
        })
        .collect()
}

fn project(t: &[usize], idx: &[usize]) -> Tuple {
    idx.iter().map(|&i| t[i]).collect()
}

impl Ctx<'_> {
    pub(crate) fn eval_lasso(
        &self,
        lasso: &Lasso,
        header: &Formula,
        vars: &[String],
        env: &PredEnv,
    ) -> Result<Relation> {
        let envs: Vec<PredEnv> = (0..lasso.len()).map(|i| lasso.env_at(i, env)).collect();
        let table = self.table(lasso, &envs, header)?;
        Ok(self.lift(&table.at[0], &table.vars, vars))
    }

    /// Reads `rel` (columns `from`) as a relation over `to`, which must
    /// contain every variable of `from`.
    fn lift(&self, rel: &Relation, from: &[String], to: &[String]) -> Relation {
        if from == to {
            return rel.clone();
        }
        let idx = positions(from, to);
        Relation::collect_arity(
            to.len(),
            all_tuples(self.n(), to.len()).filter(|t| rel.contains(&project(t, &idx))),
        )
    }

    fn lifted(&self, t: &Table, to: &[String]) -> Vec<Relation> {
        t.at.iter().map(|r| self.lift(r, &t.vars, to)).collect()
    }

    fn table(&self, lasso: &Lasso, envs: &[PredEnv], f: &Formula) -> Result<Table> {
        let vars = free_vars_ordered(f);
        let len = lasso.len();
        let k = vars.len();
        let n = self.n();

        if !is_temporal(f) {
            let preds = free_predicates(f);
            let varying = lasso.preds().iter().any(|(p, _)| preds.contains(p));
            let mut at: Vec<Relation> = Vec::with_capacity(len);
            for (i, env) in envs.iter().enumerate() {
                if !varying && i > 0 {
                    at.push(at[0].clone());
                } else {
                    at.push(self.sat_set(f, env, &vars, &mut Vec::new())?);
                }
            }
            return Ok(Table { vars, at });
        }

        let step = |i: usize| lasso.successor(i);
        let at = match f {
            Formula::Not(a) => {
                let a = self.table(lasso, envs, a)?;
                self.lifted(&a, &vars)
                    .iter()
                    .map(|r| r.complement(n))
                    .collect()
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                let a = self.lifted(&self.table(lasso, envs, a)?, &vars);
                let b = self.lifted(&self.table(lasso, envs, b)?, &vars);
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| match f {
                        Formula::And(..) => x.intersection(y),
                        Formula::Or(..) => x.union(y),
                        Formula::Implies(..) => x.complement(n).union(y),
                        _ => x
                            .intersection(y)
                            .union(&x.complement(n).intersection(&y.complement(n))),
                    })
                    .collect()
            }
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let want = matches!(f, Formula::Exists(..));
                let inner = self.table(lasso, envs, a)?;
                let mut ext = vars.clone();
                ext.push(v.clone());
                let idx = positions(&inner.vars, &ext);
                inner
                    .at
                    .iter()
                    .map(|r| {
                        let holds = |t: &Tuple| {
                            let mut t = t.clone();
                            t.push(0);
                            (0..n).any(|e| {
                                t[k] = e;
                                r.contains(&project(&t, &idx)) == want
                            }) == want
                        };
                        Relation::collect_arity(k, all_tuples(n, k).filter(holds))
                    })
                    .collect()
            }
            Formula::Next(a) => {
                let a = self.lifted(&self.table(lasso, envs, a)?, &vars);
                (0..len).map(|i| a[step(i)].clone()).collect()
            }
            Formula::Eventually(a) => {
                let a = self.lifted(&self.table(lasso, envs, a)?, &vars);
                sweep(len, step, vec![Relation::empty(k); len], |i, next| {
                    a[i].union(next)
                })
            }
            Formula::Always(a) => {
                let a = self.lifted(&self.table(lasso, envs, a)?, &vars);
                sweep(len, step, vec![Relation::full(k, n); len], |i, next| {
                    a[i].intersection(next)
                })
            }
            Formula::Until(a, b) => {
                let a = self.lifted(&self.table(lasso, envs, a)?, &vars);
                let b = self.lifted(&self.table(lasso, envs, b)?, &vars);
                sweep(len, step, vec![Relation::empty(k); len], |i, next| {
                    b[i].union(&a[i].intersection(next))
                })
            }
            _ => unreachable!("atoms and nested constructs are never temporal"),
        };
        Ok(Table { vars, at })
    }
}

/// Iterates `t[i] := unfold(i, t[step(i)])` over all positions until nothing
/// changes. Started from the empty relation this gives the least fixpoint,
/// from the full relation the greatest.
fn sweep(
    len: usize,
    step: impl Fn(usize) -> usize,
    mut t: Vec<Relation>,
    unfold: impl Fn(usize, &Relation) -> Relation,
) -> Vec<Relation> {
    loop {
        let mut changed = false;
        for i in (0..len).rev() {
            let v = unfold(i, &t[step(i)]);
            if v != t[i] {
                t[i] = v;
                changed = true;
            }
        }
        if !changed {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::eval::Evaluator;
    use crate::formula::{header_vars, parse_formula, IterationSystem};
    use crate::structure::{parse_structure, Relation};

    fn rel(k: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(k, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    fn flip_eval(header: &str) -> Relation {
        let s = parse_structure("domain 1").unwrap();
        let ev = Evaluator::new(&s);
        let sys = IterationSystem::single("R", &["x"], parse_formula("!R(x)").unwrap());
        let lasso = ev.iterate(&sys).unwrap();
        let h = parse_formula(&format!("[{header}][iter R(x): R(x)](z)")).unwrap();
        let crate::formula::Formula::Iter { header, .. } = h else {
            unreachable!()
        };
        ev.eval_lasso(&lasso, &header, &header_vars(&header))
            .unwrap()
    }

    #[test]
    fn flip_headers() {
        assert_eq!(flip_eval("F R(z)"), rel(1, &[&[0]]));
        assert_eq!(flip_eval("G R(z)"), Relation::empty(1));
        assert_eq!(flip_eval("G F R(z)"), rel(1, &[&[0]]));
        assert_eq!(flip_eval("F G R(z)"), Relation::empty(1));
        assert_eq!(flip_eval("X R(z)"), rel(1, &[&[0]]));
        assert_eq!(flip_eval("X X R(z)"), Relation::empty(1));
        assert_eq!(flip_eval("!R(z) U R(z)"), rel(1, &[&[0]]));
        assert_eq!(flip_eval("R(z) U R(z)"), Relation::empty(1));
    }

    #[test]
    fn tc_eventually_is_union_of_stages() {
        let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
        let q =
            parse_formula("[F R(z1,z2)][iter R(x,y): E(x,y) | exists z. (E(x,z) & R(z,y))](a,b)")
                .unwrap();
        let (_, r) = Evaluator::new(&s).query_free(&q).unwrap();
        assert_eq!(r, rel(2, &[&[0, 1], &[1, 2], &[0, 2]]));
    }

    #[test]
    fn quantifiers_over_temporal_bodies() {
        let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
        let ev = Evaluator::new(&s);
        // Column order follows first occurrence in the header.
        let q = parse_formula(
            "[exists w. X (R(z2,w) & !F R(z1, z1))][iter R(x,y): E(x,y) | exists z. (E(x,z) & R(z,y))](a,b)",
        )
        .unwrap();
        let (_, r) = ev.query_free(&q).unwrap();
        // z2 must have an E-successor at stage 1; z1 never reaches itself.
        let expected: Relation = (0..3)
            .flat_map(|a| [0usize, 1].into_iter().map(move |b| vec![b, a]))
            .collect();
        assert_eq!(r, expected);
    }
}
