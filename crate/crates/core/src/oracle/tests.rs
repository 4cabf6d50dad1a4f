use super::*;
use crate::syntax::{parse_formula, Vocabulary};
use crate::transforms::{eliminate_dependence_atoms, ElimOptions};

fn e(i: u32) -> Element {
    Element::Base(i)
}

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|v| Var::from(*v)).collect()
}

#[test]
fn team_enumeration_counts() {
    let d2 = [e(0), e(1)];
    let teams: Vec<Team> = enumerate_teams(&vars(&["x"]), &d2, None).unwrap().collect();
    assert_eq!(teams.len(), 4);
    assert!(teams[0].is_empty());
    assert_eq!(teams[3].len(), 2);
    assert_eq!(enumerate_teams(&vars(&["x", "y"]), &[e(0)], None).unwrap().count(), 2);
    let zero: Vec<Team> = enumerate_teams(&[], &d2, None).unwrap().collect();
    assert_eq!(zero, [Team::empty([]), Team::unit()]);
}

#[test]
fn team_enumeration_cap() {
    let d3 = [e(0), e(1), e(2)];
    assert!(matches!(
        enumerate_teams(&vars(&["x", "y"]), &d3, Some(8)),
        Err(OracleError::CapExceeded { rows: 9, cap: 8 })
    ));
}

#[test]
fn dependence_is_self_independence() {
    let v = Vocabulary::new();
    let dep = parse_formula("=(x,y)", &v).unwrap();
    let perp = eliminate_dependence_atoms(&dep, ElimOptions::default());
    assert_eq!(perp.to_string(), "perp(y;x;y)");
    let ev = Evaluator::new(Registry::builtin(), EvalConfig::default());
    let insts = instances(&v, &vars(&["x", "y"]), 2).unwrap();
    let report = check_equivalence(&Side::Team(dep), &Side::Team(perp), insts, &ev).unwrap();
    // 2 teams on one element, 16 on two.
    assert_eq!(report.checked, 2 + 16);
    assert!(report.counterexample.is_none());
    assert_eq!(report.to_string(), "checked 18 instances, 0 counterexamples");
}

#[test]
fn flat_formula_matches_pointwise() {
    let v = Vocabulary::parse("P/1").unwrap();
    let phi = parse_formula("(P(x) | E z ~z=x)", &v).unwrap();
    let ev = Evaluator::new(Registry::builtin(), EvalConfig::default());
    let insts = instances(&v, &vars(&["x"]), 2).unwrap();
    let report =
        check_equivalence(&Side::Team(phi.clone()), &Side::Pointwise(phi), insts, &ev).unwrap();
    assert!(report.counterexample.is_none());
}

#[test]
fn broken_translation_yields_replayable_counterexample() {
    let v = Vocabulary::new();
    let dep = parse_formula("=(x,y)", &v).unwrap();
    // Conditioning on the wrong variable.
    let broken = parse_formula("perp(y;y;y)", &v).unwrap();
    let reg = Registry::builtin();
    let ev = Evaluator::new(reg.clone(), EvalConfig::default());
    let insts = instances(&v, &vars(&["x", "y"]), 2).unwrap();
    let report = check_equivalence(&Side::Team(dep), &Side::Team(broken), insts, &ev).unwrap();
    let c = report.counterexample.as_ref().expect("a counterexample");
    assert!(c.replay(&reg).unwrap());
    assert_eq!(c.lhs_value, Outcome::False);
    assert_eq!(c.rhs_value, Outcome::True);
    assert_eq!(c.instance.team.len(), 2);
    assert!(report.to_string().starts_with("checked "));
    assert!(report.to_string().contains("1 counterexamples"));
}

#[test]
fn evaluation_errors_carry_the_instance() {
    let v = Vocabulary::parse("P/1").unwrap();
    let phi = parse_formula("P(z)", &v).unwrap();
    let ev = Evaluator::new(Registry::builtin(), EvalConfig::default());
    let insts = instances(&v, &vars(&["x"]), 1).unwrap();
    let err = check_equivalence(&Side::Team(phi.clone()), &Side::Pointwise(phi), insts, &ev)
        .unwrap_err();
    assert!(matches!(err, OracleError::OnInstance { .. }), "{err}");
}

fn ty_vars() -> (TyParams, BTreeSet<Element>) {
    (TyParams::default(), [e(0), e(1)].into())
}

fn team(names: &[&str], rows: &[&[u32]]) -> Team {
    Team::from_rows(
        &vars(names),
        rows.iter().map(|r| r.iter().map(|&i| e(i)).collect()),
    )
    .unwrap()
}

#[test]
fn suitable_pair_conditions() {
    let (params, s) = ty_vars();
    let chi = parse_formula("A x Y(x)", &Vocabulary::parse("Y/1").unwrap()).unwrap();
    let root = Position::root();
    let good = team(&["y", "u", "u'"], &[&[0, 0, 1], &[1, 0, 1]]);
    assert!(is_suitable_pair(&Team::unit(), &good, &s, &params, &chi, &root));
    let two_u = team(&["y", "u", "u'"], &[&[0, 0, 1], &[1, 1, 0]]);
    assert!(!is_suitable_pair(&Team::unit(), &two_u, &s, &params, &chi, &root));
    let outside = team(&["y", "u", "u'"], &[&[0, 0, 1], &[1, 0, 1], &[2, 0, 1]]);
    assert!(!is_suitable_pair(&Team::unit(), &outside, &s, &params, &chi, &root));
    let missing = team(&["y", "u", "u'"], &[&[0, 0, 1]]);
    assert!(!is_suitable_pair(&Team::unit(), &missing, &s, &params, &chi, &root));

    // Under the universal quantifier the domain must include x.
    let body = root.child(0);
    let u = team(&["x"], &[&[0], &[1]]);
    let v = team(
        &["x", "y", "u", "u'"],
        &[&[0, 0, 0, 1], &[0, 1, 0, 1], &[1, 0, 0, 1], &[1, 1, 0, 1]],
    );
    assert!(is_suitable_pair(&u, &v, &s, &params, &chi, &body));
    assert!(!is_suitable_pair(&Team::unit(), &v, &s, &params, &chi, &body));
    assert!(!is_suitable_pair(&u, &v, &s, &params, &chi, &root.child(5)));
}

#[test]
fn closure_matches_preimage_search() {
    let y = Var::from("y");
    let s: BTreeSet<Element> = [e(0), e(2)].into();
    let yes = team(&["y", "z"], &[&[0, 1], &[2, 1]]);
    let no = team(&["y", "z"], &[&[0, 1], &[2, 0]]);
    assert!(closed_under_y(&yes, &y, &s) && is_y_extension_brute_force(&yes, &y, &s));
    assert!(!closed_under_y(&no, &y, &s) && !is_y_extension_brute_force(&no, &y, &s));
    let empty = Team::empty(vars(&["y", "z"]));
    assert!(closed_under_y(&empty, &y, &BTreeSet::new()));
    assert!(is_y_extension_brute_force(&empty, &y, &BTreeSet::new()));
}

#[test]
fn corpora_sizes() {
    assert!(corpus("flat").unwrap().len() >= 50);
    assert!(corpus("lemma2").unwrap().len() >= 30);
    for q in ["star_exists", "star_forall", "star_majority"] {
        assert!(corpus(q).unwrap().len() >= 30, "{q}");
    }
    assert!(corpus("nope").is_none());
}

#[test]
fn unknown_suite() {
    assert_eq!(
        run_suite("nope", &SuiteConfig::default()),
        Err(OracleError::UnknownSuite("nope".into()))
    );
}

#[test]
fn small_invariant_suites_pass() {
    for name in ["team-count", "suitable-pair", "quantifier-algebra", "encoding", "lre-budget"] {
        let r = run_suite(name, &SuiteConfig::default()).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checked > 0);
    }
}
