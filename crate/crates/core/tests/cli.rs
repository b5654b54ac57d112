use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tai::structure::parse_structure;
use tai::ParseOptions;

const TC: &str = "lfp[R(x,y): E(x,y) | exists z. (E(x,z) & R(z,y))](a,b)";
const TC_BODY: &str = "E(x,y) | exists z. (E(x,z) & R(z,y))";
const PATH: &str = "domain 3\nrel E/2 = { (0,1) (1,2) }\n";

fn tai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tai"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_structure(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("s.txt");
    fs::write(&p, text).unwrap();
    p
}

fn eval(structure: &Path, query: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "eval",
        "--structure",
        structure.to_str().unwrap(),
        "--query",
        query,
    ];
    args.extend_from_slice(extra);
    tai(&args)
}

#[test]
fn eval_prints_sorted_tuples() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let o = eval(&s, TC, &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "(0,1)\n(0,2)\n(1,2)\n");
    let o = eval(&s, TC, &["--format", "counts"]);
    assert_eq!(stdout(&o), "3\n");
}

#[test]
fn vars_fix_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let o = eval(&s, TC, &["--vars", "b,a"]);
    assert_eq!(stdout(&o), "(1,0)\n(2,0)\n(2,1)\n");
}

#[test]
fn literal_pfp_cap_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let o = eval(&s, "pfpcap[R(x): !R(x)](z)", &["--vars", "z"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "");
}

#[test]
fn query_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let q = dir.path().join("q.txt");
    fs::write(&q, format!("{TC}\n")).unwrap();
    let o = tai(&[
        "eval",
        "--structure",
        s.to_str().unwrap(),
        "--query-file",
        q.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "(0,1)\n(0,2)\n(1,2)\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);

    let o = eval(&s, "E(x,", &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:5"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "domain 2\nrel E/2 = { (0,5) }\n").unwrap();
    assert_eq!(code(&eval(&bad, "E(x,y)", &[])), 1);

    assert_eq!(code(&eval(&dir.path().join("missing"), "E(x,y)", &[])), 1);

    assert_eq!(code(&eval(&s, "E(x)", &[])), 2);
    assert_eq!(code(&eval(&s, "lfp[R(x): !R(x)](z)", &[])), 2);

    let o = eval(&s, TC, &["--max-steps", "1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn translate_to_pfp_output_reparses_and_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let q = format!("[F R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)");
    let o = tai(&[
        "translate",
        "--to",
        "pfp",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        &q,
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let out = text.trim_end();
    let sig = parse_structure(PATH).unwrap();
    let f = ParseOptions::with_signature(sig.signature())
        .allow_reserved(true)
        .parse(out)
        .unwrap();
    assert!(tai::translate::is_temporal_free(&f));
    let again = eval(&s, out, &["--vars", "a,b"]);
    assert_eq!(stdout(&again), "(0,1)\n(0,2)\n(1,2)\n");

    let o = tai(&[
        "translate",
        "--to",
        "pfp",
        "--check",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        &q,
    ]);
    assert!(stdout(&o).ends_with("MATCH\n"));
}

#[test]
fn translate_to_lfp_is_rerunnable_with_aux_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let q = format!("[F R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)");
    let o = tai(&[
        "translate",
        "--to",
        "lfp",
        "--check",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        &q,
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(*lines.last().unwrap(), "MATCH");
    let formula = lines[0];
    let rels: Vec<&str> = lines
        .iter()
        .copied()
        .filter(|l| l.starts_with("rel "))
        .collect();
    assert_eq!(rels.len(), 2);

    let augmented = format!("{PATH}{}\n", rels.join("\n"));
    let s2 = dir.path().join("aug.txt");
    fs::write(&s2, augmented).unwrap();
    let again = eval(&s2, formula, &["--vars", "a,b"]);
    assert_eq!(code(&again), 0);
    assert_eq!(stdout(&again), "(0,1)\n(0,2)\n(1,2)\n");
}

#[test]
fn translate_to_lfp_rejects_mixed_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let q = "[F R(z)][iter R(x): !R(x) | E(x,x)](a)";
    let o = tai(&[
        "translate",
        "--to",
        "lfp",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        q,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn translate_to_pfp_rejects_nested_temporal_operands() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_structure(dir.path(), PATH);
    let q = format!("[F X R(z1,z2)][iter R(x,y): {TC_BODY}](a,b)");
    let o = tai(&[
        "translate",
        "--to",
        "pfp",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        &q,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_reports_counts() {
    let o = tai(&[
        "check",
        "--law",
        "lfp-direct",
        "--count",
        "100",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("100/100 pass"), "{}", stdout(&o));
    let o = tai(&[
        "check",
        "--law",
        "osc-squared",
        "--count",
        "100",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("100/100 pass"));
}

#[test]
fn check_mutant_prints_counterexample() {
    let o = tai(&[
        "check",
        "--law",
        "lfp-direct",
        "--count",
        "100",
        "--seed",
        "7",
        "--mutant",
        "swap-fg",
    ]);
    assert_eq!(code(&o), 4);
    let out = stdout(&o);
    assert!(out.contains("first counterexample"));
    assert!(out.contains("structure:\ndomain"));
}

#[test]
fn check_rejects_unknown_law() {
    assert_eq!(code(&tai(&["check", "--law", "no-such-law"])), 2);
}

#[test]
fn fuzz_is_deterministic_and_well_formed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = tai(&[
            "fuzz",
            "--seed",
            "1",
            "--count",
            "3",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in &names {
        assert_eq!(
            fs::read(a.path().join(n)).unwrap(),
            fs::read(b.path().join(n)).unwrap()
        );
    }

    let c = tempfile::tempdir().unwrap();
    let o = tai(&[
        "fuzz",
        "--seed",
        "5",
        "--count",
        "40",
        "--max-domain",
        "2",
        "--out",
        c.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    for i in 0..40 {
        let s = parse_structure(
            &fs::read_to_string(c.path().join(format!("{i:03}.structure"))).unwrap(),
        )
        .unwrap();
        assert!(s.domain_size() <= 2);
        let text = fs::read_to_string(c.path().join(format!("{i:03}.formula"))).unwrap();
        let f = ParseOptions::with_signature(s.signature())
            .parse(&text)
            .unwrap();
        tai::formula::check_formula(&f, Some(s.signature())).unwrap();
    }
}

#[test]
fn fuzz_stdout_matches_across_runs() {
    let a = tai(&["fuzz", "--seed", "3", "--count", "5"]);
    let b = tai(&["fuzz", "--seed", "3", "--count", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}
