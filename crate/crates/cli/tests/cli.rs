use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

fn teamsem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamsem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

struct Files {
    _dir: TempDir,
    model: String,
    team: String,
}

fn files() -> Files {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m2.txt", "model { domain: 2\n  relation R/1: (1) }");
    let team = write(&dir, "t.txt", "team { vars: x row: 0 row: 1 }");
    Files {
        model: model.to_string_lossy().into_owned(),
        team: team.to_string_lossy().into_owned(),
        _dir: dir,
    }
}

#[test]
fn constancy_on_two_values_is_false() {
    let f = files();
    let o = teamsem(&["eval", "--model", &f.model, "--team", &f.team, "--formula", "=(x)"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "false");
}

#[test]
fn eval_true_and_bloat() {
    let f = files();
    let o = teamsem(&["eval", "--model", &f.model, "--team", &f.team, "--formula", "(R(x) | ~R(x))"]);
    assert_eq!(o.status.code(), Some(0));
    let o = teamsem(&["eval", "--model", &f.model, "--formula", "I w E x E y E z (~x=y & (~y=z & ~x=z))"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\nleast bloat: 1\n");
}

#[test]
fn exhausted_budget_is_unknown() {
    let f = files();
    let o = teamsem(&[
        "eval",
        "--model",
        &f.model,
        "--max-bloat",
        "0",
        "--formula",
        "I w E x E y E z (~x=y & (~y=z & ~x=z))",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).trim(), "unknown");
}

#[test]
fn bad_input_exits_two() {
    let f = files();
    let o = teamsem(&["eval", "--model", &f.model, "--formula", "~ =(x)"]);
    assert_eq!(o.status.code(), Some(2));
    let o = teamsem(&["eval", "--model", "/nonexistent/m.txt", "--formula", "R(x)"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(teamsem(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn encode_golden() {
    let f = files();
    let o = teamsem(&["encode", "--model", &f.model, "--order", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "00101");
    let o = teamsem(&["encode", "--model", &f.model, "--order", "1,0"]);
    assert_eq!(stdout(&o).trim(), "00110");
}

#[test]
fn word_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = teamsem(&["word", "abbaa"]);
    assert_eq!(o.status.code(), Some(0));
    let path = write(&dir, "w.txt", &stdout(&o));
    let back = teamsem(&["word", "--model", path.to_str().unwrap(), "--alphabet", "ab"]);
    assert_eq!(stdout(&back).trim(), "abbaa");
    let f = files();
    let not = teamsem(&["word", "--model", &f.model, "--alphabet", "ab"]);
    assert_eq!(not.status.code(), Some(1));
}

#[test]
fn translate_passes() {
    let o = teamsem(&["translate", "--pass", "dep-elim", "--formula", "E x =(z,x)"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# pass: dep-elim"));
    assert_eq!(out.lines().last(), Some("E x perp(x;z;x)"));

    let o = teamsem(&["translate", "--pass", "star", "--vocab", "P/1", "--formula", "E x P(x)"]);
    assert_eq!(
        stdout(&o).lines().last(),
        Some("A x ((iatom{exists}(;x) & P(x)) | iatom{exists_prime}(;x))")
    );

    let o = teamsem(&["translate", "--pass", "ty", "--formula", "E x Y(x)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).lines().last().unwrap().contains("Y("));
}

#[test]
fn ad_hoc_equivalence() {
    let o = teamsem(&["equiv", "--lhs", "=(x,y)", "--rhs", "perp(y;x;y)", "--max-size", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "checked 18 instances, 0 counterexamples");

    let o = teamsem(&[
        "equiv", "--lhs", "=(x,y)", "--rhs", "perp(y;y;y)", "--max-size", "2", "--report", "lines",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("checked=6 counterexamples=1\n"), "{out}");
    assert!(out.lines().skip(1).all(|l| l.starts_with("detail: ")));
}

#[test]
fn named_suites() {
    let o = teamsem(&["equiv", "--suite", "lemma2", "--max-size", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("suite lemma2: checked "), "{out}");
    assert!(out.trim_end().ends_with(" instances, 0 counterexamples"));

    let o = teamsem(&["enum-check", "--suite", "encoding", "--report", "lines"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "suite=encoding checked=36 counterexamples=0 status=pass");

    assert_eq!(teamsem(&["equiv", "--suite", "encoding"]).status.code(), Some(2));
    assert_eq!(teamsem(&["enum-check", "--suite", "lemma2"]).status.code(), Some(2));
}

#[test]
fn lre_sat_and_unknown() {
    let f = files();
    let o = teamsem(&["eval-lre", "--model", &f.model, "--sentence", "lre { I2 Y ; E x Y(x) }"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("least bloat: 1"));
    let o = teamsem(&["eval-lre", "--model", &f.model, "--sentence", "lre { I2 Y ; A x ~Y(x) }"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn custom_quantifiers_file() {
    let dir = TempDir::new().unwrap();
    let q = write(
        &dir,
        "q.toml",
        "[[quantifier]]\nname = \"two\"\nbuiltin = \"atleast\"\nk = 2\n",
    );
    let f = files();
    let o = teamsem(&[
        "eval",
        "--quantifiers",
        q.to_str().unwrap(),
        "--model",
        &f.model,
        "--formula",
        "Q{two} x ~x=x",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let o = teamsem(&["eval", "--model", &f.model, "--formula", "Q{two} x x=x"]);
    assert_eq!(o.status.code(), Some(2));
}
