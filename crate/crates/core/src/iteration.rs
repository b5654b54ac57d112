//! Stage sequences of iteration systems and stage ranks of monotone
//! iterations.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::eval::{Binds, Ctx, PredEnv};
use crate::formula::{polarity, IterationSystem, Polarity};
use crate::structure::{all_tuples, Relation, Tuple};

/// One stage: a relation per definition, in system order.
pub type Stage = Vec<Relation>;

/// An ultimately periodic stage sequence: `stages[..prefix_len]` followed by
/// `stages[prefix_len..]` repeated forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    preds: Vec<(String, usize)>,
    stages: Vec<Stage>,
    prefix_len: usize,
}

impl Lasso {
    /// Builds a lasso from explicit stages. Stages need not be distinct, so
    /// the same sequence can be presented with a longer prefix.
    pub fn from_parts(
        preds: Vec<(String, usize)>,
        stages: Vec<Stage>,
        prefix_len: usize,
    ) -> Result<Self> {
        if prefix_len >= stages.len() {
            return Err(Error::IllFormed("lasso loop must be non-empty".into()));
        }
        for st in &stages {
            if st.len() != preds.len() || st.iter().zip(&preds).any(|(r, (_, k))| r.arity() != *k) {
                return Err(Error::IllFormed(
                    "stage does not match predicate list".into(),
                ));
            }
        }
        Ok(Lasso {
            preds,
            stages,
            prefix_len,
        })
    }

    pub fn preds(&self) -> &[(String, usize)] {
        &self.preds
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn loop_len(&self) -> usize {
        self.stages.len() - self.prefix_len
    }

    /// Position reached by one step: the loop wraps back to `prefix_len`.
    pub fn successor(&self, i: usize) -> usize {
        if i + 1 < self.stages.len() {
            i + 1
        } else {
            self.prefix_len
        }
    }

    pub fn stage(&self, i: usize) -> &Stage {
        &self.stages[i]
    }

    /// Stage `i` of the infinite sequence.
    pub fn stage_at(&self, i: usize) -> &Stage {
        if i < self.stages.len() {
            &self.stages[i]
        } else {
            &self.stages[self.prefix_len + (i - self.prefix_len) % self.loop_len()]
        }
    }

    pub fn relation(&self, i: usize, pred: &str) -> Option<&Relation> {
        let j = self.preds.iter().position(|(p, _)| p == pred)?;
        Some(&self.stages[i][j])
    }

    /// The same sequence with the loop rolled once into the prefix.
    pub fn unrolled(&self) -> Lasso {
        let mut stages = self.stages.clone();
        stages.extend_from_slice(&self.stages[self.prefix_len..]);
        Lasso {
            preds: self.preds.clone(),
            stages,
            prefix_len: self.prefix_len + self.loop_len(),
        }
    }

    /// Keeps the first `len` positions and closes the sequence with a
    /// self-loop on the last kept stage.
    pub fn truncated(&self, len: usize) -> Lasso {
        let len = len.clamp(1, self.stages.len());
        Lasso {
            preds: self.preds.clone(),
            stages: self.stages[..len].to_vec(),
            prefix_len: len - 1,
        }
    }

    /// The predicate environment of position `i` layered over `env`.
    pub(crate) fn env_at(&self, i: usize, env: &PredEnv) -> PredEnv {
        let mut out = env.clone();
        for ((p, _), r) in self.preds.iter().zip(&self.stages[i]) {
            out.insert(p.clone(), r.clone());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

impl Rank {
    pub fn finite(self) -> Option<usize> {
        match self {
            Rank::Finite(r) => Some(r),
            Rank::Infinite => None,
        }
    }
}

/// Which tuples take part in stage comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageReading {
    /// Tuples of the least fixed point (every finite rank).
    #[default]
    Closure,
    /// Only tuples of the first stage.
    FirstStage,
}

/// Rank of every tuple of `M^k` in a monotone iteration: the first stage
/// containing it, or infinite if it never enters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    arity: usize,
    ranks: BTreeMap<Tuple, Rank>,
    max_finite_rank: usize,
    reading: StageReading,
}

impl RankTable {
    /// Derives ranks from an increasing stage sequence for one predicate.
    pub fn from_stages(arity: usize, n: usize, stages: &[Relation]) -> Self {
        let mut ranks = BTreeMap::new();
        let mut max_finite_rank = 0;
        for t in all_tuples(n, arity) {
            let r = stages.iter().position(|s| s.contains(&t));
            let rank = match r {
                Some(i) => {
                    max_finite_rank = max_finite_rank.max(i);
                    Rank::Finite(i)
                }
                None => Rank::Infinite,
            };
            ranks.insert(t, rank);
        }
        RankTable {
            arity,
            ranks,
            max_finite_rank,
            reading: StageReading::Closure,
        }
    }

    pub fn with_reading(mut self, reading: StageReading) -> Self {
        self.reading = reading;
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rank(&self, t: &[usize]) -> Rank {
        self.ranks.get(t).copied().unwrap_or(Rank::Infinite)
    }

    pub fn max_finite_rank(&self) -> usize {
        self.max_finite_rank
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, &Rank)> {
        self.ranks.iter()
    }

    fn participating(&self, t: &[usize]) -> Option<usize> {
        let r = self.rank(t).finite()?;
        match self.reading {
            StageReading::Closure => Some(r),
            StageReading::FirstStage => (r == 1).then_some(r),
        }
    }

    /// `a <= b` in stage order; tuples of infinite rank are incomparable.
    pub fn stage_leq(&self, a: &[usize], b: &[usize]) -> bool {
        match (self.participating(a), self.participating(b)) {
            (Some(ra), Some(rb)) => ra <= rb,
            _ => false,
        }
    }

    /// `b` lies in the stage right after `a`'s; the last stage is its own
    /// successor.
    pub fn stage_next(&self, a: &[usize], b: &[usize]) -> bool {
        match (self.participating(a), self.participating(b)) {
            (Some(ra), Some(rb)) => rb == ra + 1 || (ra == self.max_finite_rank && rb == ra),
            _ => false,
        }
    }

    /// Materialises `<=` as a relation of arity `2k`.
    pub fn leq_relation(&self) -> Relation {
        self.pair_relation(|a, b| self.stage_leq(a, b))
    }

    /// Materialises the successor relation as a relation of arity `2k`.
    pub fn next_relation(&self) -> Relation {
        self.pair_relation(|a, b| self.stage_next(a, b))
    }

    fn pair_relation(&self, holds: impl Fn(&[usize], &[usize]) -> bool) -> Relation {
        let mut out = Relation::empty(2 * self.arity);
        for a in self.ranks.keys() {
            for b in self.ranks.keys() {
                if holds(a, b) {
                    let mut t = a.clone();
                    t.extend_from_slice(b);
                    out.insert(t);
                }
            }
        }
        out
    }
}

impl Ctx<'_> {
    pub(crate) fn iterate(
        &self,
        system: &IterationSystem,
        env: &PredEnv,
        binds: &Binds,
    ) -> Result<Lasso> {
        let preds: Vec<(String, usize)> = system
            .defs
            .iter()
            .map(|d| (d.pred.clone(), d.arity()))
            .collect();
        let first: Stage = preds.iter().map(|(_, k)| Relation::empty(*k)).collect();
        let mut seen: HashMap<Stage, usize> = HashMap::from([(first.clone(), 0)]);
        let mut stages = vec![first];
        for _ in 0..self.max_steps {
            let next = self.apply_operator(system, env, binds, stages.last().unwrap())?;
            if let Some(&i) = seen.get(&next) {
                return Ok(Lasso {
                    preds,
                    stages,
                    prefix_len: i,
                });
            }
            seen.insert(next.clone(), stages.len());
            stages.push(next);
        }
        Err(Error::StepLimitExceeded(self.max_steps))
    }

    pub(crate) fn rank_table(
        &self,
        system: &IterationSystem,
        env: &PredEnv,
        binds: &Binds,
    ) -> Result<RankTable> {
        let [def] = system.defs.as_slice() else {
            return Err(Error::IllFormed(
                "rank tables need a single definition".into(),
            ));
        };
        let pol = polarity(&def.body, &def.pred);
        if !pol.is_monotone() {
            return Err(Error::Polarity {
                construct: "stage comparison".into(),
                pred: def.pred.clone(),
                found: pol,
                required: Polarity::Positive,
            });
        }
        let lasso = self.iterate(system, env, binds)?;
        let stages: Vec<Relation> = lasso.stages().iter().map(|s| s[0].clone()).collect();
        Ok(RankTable::from_stages(def.arity(), self.n(), &stages))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Evaluator;
    use crate::formula::parse_formula;
    use crate::structure::{parse_structure, FiniteStructure};

    fn path() -> FiniteStructure {
        parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap()
    }

    fn tc() -> IterationSystem {
        IterationSystem::single(
            "R",
            &["x", "y"],
            parse_formula("E(x,y) | exists z. (E(x,z) & R(z,y))").unwrap(),
        )
    }

    fn rel(k: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(k, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    #[test]
    fn tc_on_path() {
        let s = path();
        let lasso = Evaluator::new(&s).iterate(&tc()).unwrap();
        let stages: Vec<_> = lasso.stages().iter().map(|st| st[0].clone()).collect();
        assert_eq!(
            stages,
            vec![
                Relation::empty(2),
                rel(2, &[&[0, 1], &[1, 2]]),
                rel(2, &[&[0, 1], &[1, 2], &[0, 2]]),
            ]
        );
        assert_eq!((lasso.prefix_len(), lasso.loop_len()), (2, 1));
    }

    #[test]
    fn flip_oscillates() {
        let s = parse_structure("domain 1").unwrap();
        let sys = IterationSystem::single("R", &["x"], parse_formula("!R(x)").unwrap());
        let lasso = Evaluator::new(&s).iterate(&sys).unwrap();
        assert_eq!(lasso.len(), 2);
        assert_eq!((lasso.prefix_len(), lasso.loop_len()), (0, 2));
        assert_eq!(lasso.stage(1)[0], rel(1, &[&[0]]));
    }

    #[test]
    fn identity_operator_is_fixed_at_empty() {
        let s = parse_structure("domain 2").unwrap();
        let sys = IterationSystem::single("R", &["x"], parse_formula("R(x)").unwrap());
        let lasso = Evaluator::new(&s).iterate(&sys).unwrap();
        assert_eq!(
            (lasso.len(), lasso.prefix_len(), lasso.loop_len()),
            (1, 0, 1)
        );
    }

    #[test]
    fn step_limit() {
        let s = path();
        // Three applications: two new stages, then the repeat.
        let err = Evaluator::new(&s)
            .with_max_steps(2)
            .iterate(&tc())
            .unwrap_err();
        assert_eq!(err, Error::StepLimitExceeded(2));
        assert!(Evaluator::new(&s).with_max_steps(3).iterate(&tc()).is_ok());
    }

    #[test]
    fn lasso_closure() {
        let s = path();
        let ev = Evaluator::new(&s);
        let lasso = ev.iterate(&tc()).unwrap();
        let last = lasso.stage(lasso.len() - 1);
        assert_eq!(
            &ev.apply_operator(&tc(), last).unwrap(),
            lasso.stage(lasso.prefix_len())
        );
        assert_eq!(lasso.unrolled().stage_at(7), lasso.stage_at(7));
    }

    #[test]
    fn ranks_on_path() {
        let s = path();
        let rt = Evaluator::new(&s).rank_table(&tc()).unwrap();
        assert_eq!(rt.rank(&[0, 1]), Rank::Finite(1));
        assert_eq!(rt.rank(&[1, 2]), Rank::Finite(1));
        assert_eq!(rt.rank(&[0, 2]), Rank::Finite(2));
        assert_eq!(rt.rank(&[2, 0]), Rank::Infinite);
        assert_eq!(rt.max_finite_rank(), 2);

        assert!(rt.stage_leq(&[0, 1], &[0, 2]));
        assert!(!rt.stage_leq(&[0, 2], &[0, 1]));
        assert!(!rt.stage_leq(&[2, 0], &[0, 1]));

        assert!(rt.stage_next(&[0, 1], &[0, 2]));
        assert!(rt.stage_next(&[0, 2], &[0, 2]));
        assert!(!rt.stage_next(&[0, 1], &[1, 2]));
    }

    #[test]
    fn first_stage_reading() {
        let s = path();
        let rt = Evaluator::new(&s)
            .rank_table(&tc())
            .unwrap()
            .with_reading(StageReading::FirstStage);
        assert!(rt.stage_leq(&[0, 1], &[1, 2]));
        assert!(!rt.stage_leq(&[0, 1], &[0, 2]));
    }

    #[test]
    fn constant_operator_ranks() {
        let s = path();
        let sys = IterationSystem::single("R", &["x"], parse_formula("x = x").unwrap());
        let rt = Evaluator::new(&s).rank_table(&sys).unwrap();
        assert!(rt.iter().all(|(_, r)| *r == Rank::Finite(1)));
    }

    #[test]
    fn rank_table_rejects_non_positive() {
        let s = path();
        let sys = IterationSystem::single("R", &["x"], parse_formula("!R(x)").unwrap());
        assert!(matches!(
            Evaluator::new(&s).rank_table(&sys),
            Err(Error::Polarity { .. })
        ));
    }
}
