//! Worked examples run through the public API, one small structure at a
//! time.

use tai::formula::{free_variables, parse_formula};
use tai::rewrite::expand;
use tai::structure::parse_structure;
use tai::translate::{eval_with_aux, translate_monotone_to_lfp, translate_to_pfp};
use tai::{Assignment, Error, Evaluator, Formula, IterationSystem, Lasso, PredEnv, Rank, Relation};

const PATH: &str = "domain 3\nrel E/2 = { (0,1) (1,2) }";
const TC_BODY: &str = "E(x,y) | exists z. (E(x,z) & R(z,y))";

fn rel(arity: usize, tuples: &[&[usize]]) -> Relation {
    Relation::collect_arity(arity, tuples.iter().map(|t| t.to_vec()))
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Evaluates `query` on `structure` with the given column order.
fn q(structure: &str, query: &str, cols: &[&str]) -> Relation {
    let s = parse_structure(structure).unwrap();
    let f = parse_formula(query).unwrap();
    Evaluator::new(&s).query(&f, &vars(cols)).unwrap()
}

fn tc_system() -> IterationSystem {
    IterationSystem::single("R", &["x", "y"], parse_formula(TC_BODY).unwrap())
}

#[test]
fn structure_files() {
    let s = parse_structure(PATH).unwrap();
    assert_eq!(s.domain_size(), 3);
    assert_eq!(s.relation("E"), Some(&rel(2, &[&[0, 1], &[1, 2]])));
    assert!(parse_structure("domain 1\nrel P/1 = { }")
        .unwrap()
        .relation("P")
        .unwrap()
        .is_empty());
    assert!(matches!(
        parse_structure("domain 2\nrel E/2 = { (0,5) }"),
        Err(Error::ElementOutOfRange { element: 5, .. })
    ));
    assert_eq!(parse_structure(&s.to_string()).unwrap(), s);
    let c = parse_structure("domain 2\nconst a = 0\nrel P/1 = { }").unwrap();
    let text = c.to_string();
    assert!(text.contains("const a = 0"));
    assert!(text.contains("{ }"));
}

#[test]
fn free_variables_of_small_formulas() {
    let fv = |s: &str| {
        free_variables(&parse_formula(s).unwrap())
            .into_iter()
            .collect::<Vec<_>>()
    };
    assert_eq!(fv("E(x,y)"), vars(&["x", "y"]));
    assert_eq!(fv("[F R(z)][iter R(x): !R(x)](y)"), vars(&["y"]));
    assert_eq!(fv("exists x. E(x,y)"), vars(&["y"]));
}

#[test]
fn first_order_evaluation() {
    let s = parse_structure(PATH).unwrap();
    let ev = Evaluator::new(&s);
    let env = PredEnv::new();
    let a = Assignment::new().with("x", 0).with("y", 1);
    assert!(ev
        .eval_fo(&env, &parse_formula("E(x,y)").unwrap(), &a)
        .unwrap());
    assert!(!ev
        .eval_fo(
            &env,
            &parse_formula("forall x. exists y. E(x,y)").unwrap(),
            &Assignment::new()
        )
        .unwrap());
    assert_eq!(q(PATH, "exists y. E(x,y)", &["x"]), rel(1, &[&[0], &[1]]));
    assert_eq!(q(PATH, "x = x", &["x"]).len(), 3);
    assert!(q(PATH, "!(x = x)", &["x"]).is_empty());
}

#[test]
fn one_operator_step() {
    let s = parse_structure(PATH).unwrap();
    let ev = Evaluator::new(&s);
    let next = ev
        .apply_operator(&tc_system(), &[Relation::empty(2)])
        .unwrap();
    assert_eq!(next, vec![rel(2, &[&[0, 1], &[1, 2]])]);

    let one = parse_structure("domain 1").unwrap();
    let ev = Evaluator::new(&one);
    let sys = parse_formula("[A(z)][iter A(x): !B(x); B(x): A(x)](c)").unwrap();
    let Formula::Iter { system, .. } = sys else {
        unreachable!()
    };
    let next = ev
        .apply_operator(&system, &[Relation::empty(1), Relation::empty(1)])
        .unwrap();
    assert_eq!(next, vec![rel(1, &[&[0]]), Relation::empty(1)]);
}

#[test]
fn stage_sequences() {
    let s = parse_structure(PATH).unwrap();
    let l = Evaluator::new(&s).iterate(&tc_system()).unwrap();
    let firsts: Vec<Relation> = l.stages().iter().map(|st| st[0].clone()).collect();
    assert_eq!(
        firsts,
        vec![
            Relation::empty(2),
            rel(2, &[&[0, 1], &[1, 2]]),
            rel(2, &[&[0, 1], &[1, 2], &[0, 2]])
        ]
    );
    assert_eq!((l.prefix_len(), l.loop_len()), (2, 1));

    let one = parse_structure("domain 1").unwrap();
    let flip = IterationSystem::single("R", &["x"], parse_formula("!R(x)").unwrap());
    let l = Evaluator::new(&one).iterate(&flip).unwrap();
    assert_eq!((l.prefix_len(), l.loop_len()), (0, 2));

    let two = parse_structure("domain 2").unwrap();
    let id = IterationSystem::single("R", &["x"], parse_formula("R(x)").unwrap());
    let l = Evaluator::new(&two).iterate(&id).unwrap();
    assert_eq!((l.len(), l.prefix_len(), l.loop_len()), (1, 0, 1));
}

#[test]
fn ranks_and_stage_comparison() {
    let s = parse_structure(PATH).unwrap();
    let rt = Evaluator::new(&s).rank_table(&tc_system()).unwrap();
    assert_eq!(rt.rank(&[0, 1]), Rank::Finite(1));
    assert_eq!(rt.rank(&[0, 2]), Rank::Finite(2));
    assert_eq!(rt.rank(&[2, 0]), Rank::Infinite);
    assert!(rt.stage_leq(&[0, 1], &[0, 2]));
    assert!(!rt.stage_leq(&[0, 2], &[0, 1]));
    assert!(!rt.stage_leq(&[2, 0], &[0, 1]));
    assert!(rt.stage_next(&[0, 1], &[0, 2]));
    assert!(rt.stage_next(&[0, 2], &[0, 2]));
    assert!(!rt.stage_next(&[0, 1], &[1, 2]));
}

fn flip_lasso() -> Lasso {
    Lasso::from_parts(
        vec![("R".to_string(), 1)],
        vec![vec![Relation::empty(1)], vec![rel(1, &[&[0]])]],
        0,
    )
    .unwrap()
}

#[test]
fn headers_on_the_flip_lasso() {
    let s = parse_structure("domain 1").unwrap();
    let ev = Evaluator::new(&s);
    let l = flip_lasso();
    let h = |t: &str| {
        ev.eval_lasso(
            &l,
            &parse_formula(&format!("[{t}][iter R(x): R(x)](c)"))
                .map(header)
                .unwrap(),
            &vars(&["z"]),
        )
        .unwrap()
    };
    assert_eq!(h("F R(z)"), rel(1, &[&[0]]));
    assert!(h("G R(z)").is_empty());
    assert_eq!(h("G F R(z)"), rel(1, &[&[0]]));
    assert!(h("F G R(z)").is_empty());
}

fn header(f: Formula) -> Formula {
    match f {
        Formula::Iter { header, .. } => *header,
        _ => unreachable!(),
    }
}

#[test]
fn eventually_collects_every_stage() {
    let r = q(
        PATH,
        &format!("[F R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)"),
        &["a", "b"],
    );
    assert_eq!(r, rel(2, &[&[0, 1], &[1, 2], &[0, 2]]));
}

#[test]
fn derived_constructs_expand_to_iteration() {
    let lfp = parse_formula(&format!("lfp[R(x,y): {TC_BODY}](a,b)")).unwrap();
    match expand(&lfp).unwrap() {
        Formula::Iter { header, system, .. } => {
            assert!(matches!(*header, Formula::Eventually(_)));
            assert_eq!(system, tc_system());
        }
        other => panic!("{other}"),
    }
    let ifp = parse_formula("ifp[R(x): !R(x)](c)").unwrap();
    match expand(&ifp).unwrap() {
        Formula::Iter { system, .. } => {
            assert_eq!(system.defs[0].body, parse_formula("R(x) | !R(x)").unwrap());
        }
        other => panic!("{other}"),
    }
    let id = parse_formula("id[P(x): !P(x)](c)").unwrap();
    match expand(&id).unwrap() {
        Formula::Iter { system, .. } => assert_eq!(system.defs.len(), 2),
        other => panic!("{other}"),
    }
}

#[test]
fn derived_constructs_on_the_flip_body() {
    let one = "domain 1";
    assert!(q(one, "pfp[R(x): !R(x)](z)", &["z"]).is_empty());
    assert!(q(one, "pfpgen[R(x): !R(x)](z)", &["z"]).is_empty());
    assert_eq!(q(one, "rfp[R(x): !R(x)](z)", &["z"]), rel(1, &[&[0]]));
    assert_eq!(q("domain 2", "opnu[R(x): !R(x)](z)", &["z"]).len(), 2);
    assert!(q("domain 2", "opmu[R(x): !R(x)](z)", &["z"]).is_empty());
    assert!(q(one, "id[P(x): !P(x)](z)", &["z"]).is_empty());
    let tc_id = q(PATH, &format!("id[R(x,y): {TC_BODY}](a,b)"), &["a", "b"]);
    let tc_lfp = q(PATH, &format!("lfp[R(x,y): {TC_BODY}](a,b)"), &["a", "b"]);
    assert_eq!(tc_id, tc_lfp);
}

#[test]
fn translations_on_the_path() {
    let s = parse_structure(PATH).unwrap();
    let ev = Evaluator::new(&s);
    let cols = vars(&["a", "b"]);
    for header in ["R(z1,z2)", "F R(z1,z2)", "G R(z1,z2)", "X R(z1,z2)"] {
        let f = parse_formula(&format!("[{header}][iter R(x,y): {TC_BODY}](a,b)")).unwrap();
        let direct = ev.query(&f, &cols).unwrap();
        let pfp = translate_to_pfp(&f).unwrap();
        assert_eq!(ev.query(&pfp, &cols).unwrap(), direct, "{header}");
        let (lfp, aux) = translate_monotone_to_lfp(&f).unwrap();
        assert_eq!(
            eval_with_aux(&s, &lfp, &cols, &aux).unwrap(),
            direct,
            "{header}"
        );
    }
    let x = parse_formula(&format!("[X R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)")).unwrap();
    assert_eq!(ev.query(&x, &cols).unwrap(), rel(2, &[&[0, 1], &[1, 2]]));
    let base = parse_formula(&format!("[R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)")).unwrap();
    assert!(ev.query(&base, &cols).unwrap().is_empty());
}

#[test]
fn aux_atoms_follow_the_ranks() {
    let s = parse_structure(&format!("{PATH}\nconst e0 = 0\nconst e1 = 1\nconst e2 = 2")).unwrap();
    let f = parse_formula(&format!("[F R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)")).unwrap();
    let (_, aux) = translate_monotone_to_lfp(&f).unwrap();
    let leq = aux.entries[0].leq.clone();
    let aug = tai::translate::augment_structure(&s, &aux, tai::DEFAULT_MAX_STEPS).unwrap();
    let holds = |args: &str| {
        let g = tai::ParseOptions::with_signature(aug.signature())
            .allow_reserved(true)
            .parse(&format!("{leq}({args})"))
            .unwrap();
        !eval_with_aux(&s, &g, &[], &aux).unwrap().is_empty()
    };
    assert!(holds("e0,e1,e0,e2"));
    assert!(!holds("e2,e0,e0,e1"));
    assert!(!holds("e0,e2,e0,e1"));
}
