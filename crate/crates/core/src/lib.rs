//! First-order logic with temporally accessible iteration over finite
//! structures.
//!
//! An iteration construct `[psi][iter R(x): phi](t)` runs the stage sequence
//! `R^0 = {}`, `R^(i+1) = Phi(R^i)` and reads it with a temporal header `psi`
//! evaluated at stage 0. On finite structures the sequence is ultimately
//! periodic, so it is computed once as a [`Lasso`] and the header is model
//! checked over that lasso.
//!
//! ```
//! use tai::{parse_formula, parse_structure, Evaluator};
//!
//! let s = parse_structure("domain 3\nrel E/2 = { (0,1) (1,2) }").unwrap();
//! let q = parse_formula("lfp[R(x,y): E(x,y) | exists z. (E(x,z) & R(z,y))](a,b)").unwrap();
//! let (_, tc) = Evaluator::new(&s).query_free(&q).unwrap();
//! assert_eq!(tc.len(), 3);
//! ```

pub mod error;
pub mod eval;
pub mod formula;
pub mod gen;
pub mod iteration;
pub mod laws;
pub mod rewrite;
pub mod structure;
mod temporal;
pub mod translate;

pub use error::{Error, Result};
pub use eval::{Evaluator, PredEnv, DEFAULT_MAX_STEPS};
pub use formula::{
    free_variables, parse_formula, parse_formula_with, polarity, print_formula, Definition,
    DerivedKind, Formula, IterationSystem, ParseOptions, Polarity, Term,
};
pub use iteration::{Lasso, Rank, RankTable, StageReading};
pub use structure::{
    parse_structure, print_structure, Assignment, FiniteStructure, Relation, Signature,
};
