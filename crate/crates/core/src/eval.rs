//! Classical evaluation over a structure extended with predicate-variable
//! interpretations, and the evaluation pipeline entry points.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::formula::{
    check_formula, free_vars_ordered, header_vars, system_params, Formula, IterationSystem, Term,
};
use crate::iteration::{Lasso, RankTable};
use crate::rewrite;
use crate::structure::{all_tuples, Assignment, Element, FiniteStructure, Relation, Tuple};

/// Current interpretations of predicate variables.
pub type PredEnv = BTreeMap<String, Relation>;

pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Variable bindings as a stack; later entries shadow earlier ones.
pub(crate) type Binds = Vec<(String, Element)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct IterKey {
    node: usize,
    env: Vec<(String, Relation)>,
    params: Vec<Element>,
}

/// Per-call evaluation context. The value of an iteration node depends only
/// on the node, the predicate environment and the node's parameters, so
/// results are memoised on exactly that key.
pub(crate) struct Ctx<'s> {
    pub(crate) structure: &'s FiniteStructure,
    pub(crate) max_steps: usize,
    cache: RefCell<HashMap<IterKey, Rc<Relation>>>,
    params: RefCell<HashMap<usize, Rc<Vec<String>>>>,
}

impl<'s> Ctx<'s> {
    pub(crate) fn new(structure: &'s FiniteStructure, max_steps: usize) -> Self {
        Ctx {
            structure,
            max_steps,
            cache: RefCell::new(HashMap::new()),
            params: RefCell::new(HashMap::new()),
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.structure.domain_size()
    }

    fn term(&self, t: &Term, binds: &Binds) -> Result<Element> {
        match t {
            Term::Var(v) => binds
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|(_, e)| *e)
                .ok_or_else(|| Error::UnboundVariable(v.clone())),
            Term::Const(c) => self
                .structure
                .constant(c)
                .ok_or_else(|| Error::UnknownConstant(c.clone())),
        }
    }

    fn terms(&self, ts: &[Term], binds: &Binds) -> Result<Tuple> {
        ts.iter().map(|t| self.term(t, binds)).collect()
    }

    pub(crate) fn eval(&self, f: &Formula, env: &PredEnv, binds: &mut Binds) -> Result<bool> {
        match f {
            Formula::Atom { pred, args } => {
                let rel = env
                    .get(pred)
                    .or_else(|| self.structure.relation(pred))
                    .ok_or_else(|| Error::UnboundPredicate(pred.clone()))?;
                if rel.arity() != args.len() {
                    return Err(Error::ArityMismatch {
                        name: pred.clone(),
                        expected: rel.arity(),
                        found: args.len(),
                    });
                }
                Ok(rel.contains(&self.terms(args, binds)?))
            }
            Formula::Eq(a, b) => Ok(self.term(a, binds)? == self.term(b, binds)?),
            Formula::Not(a) => Ok(!self.eval(a, env, binds)?),
            Formula::And(a, b) => Ok(self.eval(a, env, binds)? && self.eval(b, env, binds)?),
            Formula::Or(a, b) => Ok(self.eval(a, env, binds)? || self.eval(b, env, binds)?),
            Formula::Implies(a, b) => Ok(!self.eval(a, env, binds)? || self.eval(b, env, binds)?),
            Formula::Iff(a, b) => Ok(self.eval(a, env, binds)? == self.eval(b, env, binds)?),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let want = matches!(f, Formula::Exists(..));
                for e in 0..self.n() {
                    binds.push((v.clone(), e));
                    let r = self.eval(a, env, binds);
                    binds.pop();
                    if r? == want {
                        return Ok(want);
                    }
                }
                Ok(!want)
            }
            Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) | Formula::Until(..) => {
                Err(Error::TemporalInFirstOrderContext)
            }
            Formula::Iter {
                header,
                system,
                args,
            } => {
                let rel = self.iter_value(f, header, system, env, binds)?;
                Ok(rel.contains(&self.terms(args, binds)?))
            }
            Formula::Derived { kind, .. } => Err(Error::IllFormed(format!(
                "`{kind}` must be expanded before evaluation"
            ))),
        }
    }

    /// The relation an iteration node's header defines at stage 0.
    fn iter_value(
        &self,
        node: &Formula,
        header: &Formula,
        system: &IterationSystem,
        env: &PredEnv,
        binds: &Binds,
    ) -> Result<Rc<Relation>> {
        let addr = node as *const Formula as usize;
        let params = self
            .params
            .borrow_mut()
            .entry(addr)
            .or_insert_with(|| Rc::new(system_params(system)))
            .clone();
        let param_binds: Binds = params
            .iter()
            .map(|p| Ok((p.clone(), self.term(&Term::Var(p.clone()), binds)?)))
            .collect::<Result<_>>()?;
        let key = IterKey {
            node: addr,
            env: env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            params: param_binds.iter().map(|(_, e)| *e).collect(),
        };
        if let Some(r) = self.cache.borrow().get(&key) {
            return Ok(r.clone());
        }
        let lasso = self.iterate(system, env, &param_binds)?;
        let rel = Rc::new(self.eval_lasso(&lasso, header, &header_vars(header), env)?);
        self.cache.borrow_mut().insert(key, rel.clone());
        Ok(rel)
    }

    pub(crate) fn sat_set(
        &self,
        f: &Formula,
        env: &PredEnv,
        vars: &[String],
        binds: &mut Binds,
    ) -> Result<Relation> {
        let mut rel = Relation::empty(vars.len());
        let depth = binds.len();
        for t in all_tuples(self.n(), vars.len()) {
            binds.extend(vars.iter().cloned().zip(t.iter().copied()));
            let r = self.eval(f, env, binds);
            binds.truncate(depth);
            if r? {
                rel.insert(t);
            }
        }
        Ok(rel)
    }

    pub(crate) fn apply_operator(
        &self,
        system: &IterationSystem,
        env: &PredEnv,
        binds: &Binds,
        current: &[Relation],
    ) -> Result<Vec<Relation>> {
        let mut stage_env = env.clone();
        for (d, r) in system.defs.iter().zip(current) {
            if r.arity() != d.arity() {
                return Err(Error::ArityMismatch {
                    name: d.pred.clone(),
                    expected: d.arity(),
                    found: r.arity(),
                });
            }
            stage_env.insert(d.pred.clone(), r.clone());
        }
        let mut binds = binds.clone();
        system
            .defs
            .iter()
            .map(|d| self.sat_set(&d.body, &stage_env, &d.vars, &mut binds))
            .collect()
    }
}

fn to_binds(a: &Assignment) -> Binds {
    a.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

/// Evaluation entry points over one structure. Derived fixpoint constructs
/// are expanded into iteration nodes before evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'s> {
    structure: &'s FiniteStructure,
    max_steps: usize,
}

impl<'s> Evaluator<'s> {
    pub fn new(structure: &'s FiniteStructure) -> Self {
        Evaluator {
            structure,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps.max(1);
        self
    }

    pub fn structure(&self) -> &'s FiniteStructure {
        self.structure
    }

    fn ctx(&self) -> Ctx<'s> {
        Ctx::new(self.structure, self.max_steps)
    }

    fn core(f: &Formula) -> Result<std::borrow::Cow<'_, Formula>> {
        if f.has_derived() {
            Ok(std::borrow::Cow::Owned(rewrite::expand(f)?))
        } else {
            Ok(std::borrow::Cow::Borrowed(f))
        }
    }

    fn core_system(system: &IterationSystem) -> Result<IterationSystem> {
        let mut out = system.clone();
        for d in out.defs.iter_mut() {
            if d.body.has_derived() {
                d.body = rewrite::expand(&d.body)?;
            }
        }
        Ok(out)
    }

    /// Truth value of a non-temporal formula under an assignment.
    pub fn eval_fo(&self, env: &PredEnv, f: &Formula, a: &Assignment) -> Result<bool> {
        let f = Self::core(f)?;
        self.ctx().eval(&f, env, &mut to_binds(a))
    }

    /// `{ v : f holds with vars := v }`, with columns in the order of `vars`.
    pub fn sat_set(&self, env: &PredEnv, f: &Formula, vars: &[String]) -> Result<Relation> {
        self.sat_set_with(env, f, vars, &Assignment::new())
    }

    pub fn sat_set_with(
        &self,
        env: &PredEnv,
        f: &Formula,
        vars: &[String],
        outer: &Assignment,
    ) -> Result<Relation> {
        let f = Self::core(f)?;
        self.ctx().sat_set(&f, env, vars, &mut to_binds(outer))
    }

    /// One synchronous step of a simultaneous system: every body reads `current`.
    pub fn apply_operator(
        &self,
        system: &IterationSystem,
        current: &[Relation],
    ) -> Result<Vec<Relation>> {
        self.apply_operator_in(system, &PredEnv::new(), current)
    }

    pub fn apply_operator_in(
        &self,
        system: &IterationSystem,
        env: &PredEnv,
        current: &[Relation],
    ) -> Result<Vec<Relation>> {
        if current.len() != system.defs.len() {
            return Err(Error::IllFormed(format!(
                "expected {} stage relations, got {}",
                system.defs.len(),
                current.len()
            )));
        }
        let system = Self::core_system(system)?;
        self.ctx()
            .apply_operator(&system, env, &Vec::new(), current)
    }

    /// The stage sequence of `system` from all-empty relations, as a lasso.
    pub fn iterate(&self, system: &IterationSystem) -> Result<Lasso> {
        self.iterate_in(system, &PredEnv::new())
    }

    pub fn iterate_in(&self, system: &IterationSystem, env: &PredEnv) -> Result<Lasso> {
        let system = Self::core_system(system)?;
        self.ctx().iterate(&system, env, &Vec::new())
    }

    /// Stage ranks for a single definition that is positive in its predicate.
    pub fn rank_table(&self, system: &IterationSystem) -> Result<RankTable> {
        let system = Self::core_system(system)?;
        self.ctx().rank_table(&system, &PredEnv::new(), &Vec::new())
    }

    /// Relation over `vars` satisfied at position 0 of `lasso` by the
    /// temporal formula `header`.
    pub fn eval_lasso(&self, lasso: &Lasso, header: &Formula, vars: &[String]) -> Result<Relation> {
        let header = Self::core(header)?;
        self.ctx().eval_lasso(lasso, &header, vars, &PredEnv::new())
    }

    /// Checks `f` against the structure's signature, expands derived
    /// constructs and returns the relation it defines over `vars`.
    pub fn query(&self, f: &Formula, vars: &[String]) -> Result<Relation> {
        check_formula(f, Some(self.structure.signature()))?;
        let fv = free_vars_ordered(f);
        if let Some(v) = fv.iter().find(|v| !vars.contains(v)) {
            return Err(Error::UnboundVariable(v.clone()));
        }
        let f = Self::core(f)?;
        self.ctx()
            .sat_set(&f, &PredEnv::new(), vars, &mut Vec::new())
    }

    /// [`Evaluator::query`] with the free variables in first-occurrence order.
    pub fn query_free(&self, f: &Formula) -> Result<(Vec<String>, Relation)> {
        let vars = free_vars_ordered(f);
        let rel = self.query(f, &vars)?;
        Ok((vars, rel))
    }
}
