use proptest::prelude::*;

use tai::gen;
use tai::laws::{self, Law, LawConfig};
use tai::structure::{all_tuples, parse_structure};
use tai::{Evaluator, ParseOptions, Relation};

fn relation(arity: usize, n: usize) -> impl Strategy<Value = Relation> {
    let all: Vec<Vec<usize>> = all_tuples(n, arity).collect();
    proptest::sample::subsequence(all.clone(), 0..=all.len())
        .prop_map(move |ts| Relation::collect_arity(arity, ts))
}

proptest! {
    #[test]
    fn relation_algebra(a in relation(2, 3), b in relation(2, 3)) {
        let n = 3;
        prop_assert_eq!(a.union(&b).complement(n), a.complement(n).intersection(&b.complement(n)));
        prop_assert_eq!(a.difference(&b), a.intersection(&b.complement(n)));
        prop_assert!(a.intersection(&b).is_subset(&a));
        prop_assert!(a.is_subset(&a.union(&b)));
        prop_assert_eq!(a.complement(n).complement(n), a);
    }

    #[test]
    fn relation_block_reparses(r in relation(2, 4)) {
        let text = format!("domain 4\nrel E/2 = {}\n", r.to_block());
        let s = parse_structure(&text).unwrap();
        prop_assert_eq!(s.relation("E").unwrap(), &r);
    }

    #[test]
    fn printed_formulas_reparse(seed in any::<u64>()) {
        let f = gen::any_formula(&mut gen::rng(seed), 4);
        let sig = parse_structure(gen::ANY_FORMULA_SIGNATURE).unwrap();
        let g = ParseOptions::with_signature(sig.signature()).parse(&f.to_string()).unwrap();
        prop_assert_eq!(g, f);
    }

    #[test]
    fn generated_formulas_evaluate(seed in any::<u64>()) {
        // Whatever the shape, a query over the fixed signature either
        // evaluates or fails with a classified error, never a panic.
        let f = gen::any_formula(&mut gen::rng(seed), 3);
        let s = parse_structure(gen::ANY_FORMULA_SIGNATURE).unwrap();
        let (_, r) = match Evaluator::new(&s).query_free(&f) {
            Ok(v) => v,
            Err(e) => {
                prop_assert!(e.exit_code() == 2 || e.exit_code() == 3, "{e}");
                return Ok(());
            }
        };
        prop_assert!(r.iter().all(|t| t.iter().all(|&e| e < s.domain_size())));
    }

    #[test]
    fn every_law_holds_per_seed(seed in any::<u64>(), law in proptest::sample::select(Law::ALL.to_vec())) {
        let cfg = LawConfig { count: 1, seed, max_domain: 3, ..LawConfig::default() };
        let report = laws::run(law, &cfg);
        prop_assert!(report.ok(), "{}", report);
    }
}
