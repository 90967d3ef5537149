use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqproof")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn example1() -> (String, String) {
    (data("example1.kb").display().to_string(), data("example1.q").display().to_string())
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn prove_reports_example1_measures() {
    let (kb, q) = example1();
    let o = run(&["prove", &kb, &q, "--format", "text"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("size 11, tree size 39, depth 5\n"));
    let o = run(&["prove", &kb, &q, "--tree-shaped-fast"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"tree_size\": 39"));
    let o = run(&["prove", &kb, &q, "--bound", "38"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn prove_matches_golden_json() {
    let (kb, q) = example1();
    let o = run(&["prove", &kb, &q]);
    assert_eq!(stdout(&o), std::fs::read_to_string(data("example1_proof.json")).unwrap());
    let o = run(&["prove", &kb, &q, "--format", "dot"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(data("example1_proof.dot")).unwrap());
}

#[test]
fn decide_exit_codes() {
    let (kb, q) = example1();
    let yes = run(&["decide", &kb, &q, "--bound", "39"]);
    assert_eq!((code(&yes), stdout(&yes).as_str()), (0, "true\n"));
    let no = run(&["decide", &kb, &q, "--bound", "38"]);
    assert_eq!((code(&no), stdout(&no).as_str()), (1, "false\n"));
    let size = run(&["decide", &kb, &q, "--measure", "size", "--bound", "11"]);
    assert_eq!(code(&size), 0);
}

#[test]
fn translate_and_check_round_trip() {
    let dir = TempDir::new().unwrap();
    let (kb, q) = example1();
    let sk = dir.path().join("sk.json").display().to_string();
    let cq = dir.path().join("cq.json").display().to_string();
    let back = dir.path().join("back.json").display().to_string();
    assert_eq!(code(&run(&["prove", &kb, &q, "-o", &sk])), 0);
    assert_eq!(code(&run(&["check", &kb, &q, "--proof", &sk])), 0);
    assert_eq!(code(&run(&["translate", &sk, &kb, &q, "--to", "cq", "-o", &cq])), 0);
    assert_eq!(code(&run(&["check", &kb, &q, "--proof", &cq, "--deriver", "cq"])), 0);
    assert_eq!(code(&run(&["check", &kb, &q, "--proof", &cq, "--deriver", "sk"])), 1);
    assert_eq!(code(&run(&["translate", &cq, &kb, &q, "--to", "sk", "-o", &back])), 0);
    assert_eq!(code(&run(&["check", &kb, &q, "--proof", &back])), 0);
}

#[test]
fn prove_with_cq_deriver_validates() {
    let dir = TempDir::new().unwrap();
    let (kb, q) = example1();
    let p = dir.path().join("p.json").display().to_string();
    assert_eq!(code(&run(&["prove", &kb, &q, "--deriver", "cq", "-o", &p])), 0);
    assert_eq!(code(&run(&["check", &kb, &q, "--proof", &p, "--deriver", "cq"])), 0);
}

#[test]
fn export_renders_dot() {
    let dir = TempDir::new().unwrap();
    let (kb, q) = example1();
    let p = dir.path().join("p.json").display().to_string();
    run(&["prove", &kb, &q, "-o", &p]);
    let o = run(&["export", &p, "--format", "dot"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("// cqproof/1\ndigraph proof {"));
    let o = run(&["export", &p]);
    assert_eq!(stdout(&o), std::fs::read_to_string(&p).unwrap());
}

#[test]
fn chain_fixture_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = run(&["gen-fixture", "chain", "--n", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("% bound 3"));
    let f = write(&dir, "chain.kb", &text);
    assert_eq!(code(&run(&["decide", &f, "--measure", "size", "--bound", "8"])), 1);
    assert_eq!(code(&run(&["decide", &f, "--measure", "size", "--bound", "9"])), 0);
    let o = run(&["prove", &f, "--format", "text"]);
    assert!(stdout(&o).ends_with("depth 4\n"));
}

#[test]
fn sat_fixture_decides_satisfiability() {
    let dir = TempDir::new().unwrap();
    for (cnf, sat) in [("1 2; -1", true), ("1; -1", false)] {
        let text = stdout(&run(&["gen-fixture", "sat", "--cnf", cnf]));
        let bound = text.lines().find_map(|l| l.strip_prefix("% bound ")).unwrap().to_string();
        let f = write(&dir, "sat.kb", &text);
        let o = run(&["decide", &f, "--deriver", "sk-prime", "--bound", &bound]);
        assert_eq!(code(&o), if sat { 0 } else { 1 }, "{cnf}");
    }
    assert_eq!(code(&run(&["gen-fixture", "sat", "--cnf", "1; ;2"])), 2);
}

#[test]
fn temporal_prove_and_check() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.kb", "A sub B.\nA(a)@[0,5].\nq(x) :- BOXP[1,2] {B(x)}.\nanswers a.\nat [0,2].\n");
    let o = run(&["temporal-prove", &f, "--format", "text"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("BOXP[1,2] {B(a)} @[0,2]"));
    let p = dir.path().join("p.json").display().to_string();
    assert_eq!(code(&run(&["temporal-prove", &f, "--target", "[-1,3]", "-o", &p])), 0);
    assert_eq!(code(&run(&["check", &f, "--proof", &p])), 0);
    assert_eq!(code(&run(&["temporal-prove", &f, "--target", "[0,5]"])), 1);
    assert_eq!(code(&run(&["temporal-prove", &f, "--target", "0,5"])), 2);
}

#[test]
fn input_errors_and_caps() {
    let dir = TempDir::new().unwrap();
    let (kb, q) = example1();
    assert_eq!(code(&run(&["check", "/nonexistent/file.kb"])), 2);
    let bad = write(&dir, "bad.kb", "A sub .\n");
    let o = run(&["check", &bad]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:7: syntax error"));
    assert_eq!(code(&run(&["prove", &kb, &q, "--cap", "1"])), 3);
    let missing = write(&dir, "q.kb", "q(x) :- Z(x).\nanswers a.\n");
    assert_eq!(code(&run(&["prove", &kb, &missing])), 1);
    assert_eq!(code(&run(&["check", &kb, &q])), 0);
    assert_eq!(code(&run(&["check", &kb, &missing])), 1);
}
