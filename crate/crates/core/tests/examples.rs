//! Worked examples across the public API.

use std::collections::BTreeSet;

use teamsem::evaluator::{eval_tarski, eval_team, is_flat, EvalConfig, Evaluator, Outcome};
use teamsem::quantifiers::{
    check_monotone, derive, general_atom_holds, induced_atom_holds, DeriveMode, Quantifier, Registry,
};
use teamsem::structures::{
    enumerate_models, word_to_model, Element, Model, StructureError, MODEL_CAP,
};
use teamsem::syntax::{make_clean, parse_formula, scope_info, Position, Var, Vocabulary};
use teamsem::teams::{Assignment, Team};
use teamsem::transforms::{
    eliminate_dependence_atoms, star_translate, translate_ty, wrap_ty, ElimOptions, TransformError,
    TyParams,
};

fn e(i: u32) -> Element {
    Element::Base(i)
}

fn v(name: &str) -> Var {
    Var::from(name)
}

fn team(vars: &[&str], rows: &[&[u32]]) -> Team {
    let vars: Vec<Var> = vars.iter().map(|x| v(x)).collect();
    Team::from_rows(&vars, rows.iter().map(|r| r.iter().map(|&i| e(i)).collect())).unwrap()
}

fn voc(text: &str) -> Vocabulary {
    Vocabulary::parse(text).unwrap()
}

#[test]
fn scope_of_nested_binders() {
    let phi = parse_formula("A x E z (P(x) | E w E(z,w))", &voc("P/1,E/2")).unwrap();
    let info = scope_info(&phi);
    let body = Position::root().child(0).child(0);
    assert_eq!(info.get(&body).unwrap().superordinate, [v("x"), v("z")]);
    assert!(!info.get(&body).unwrap().under_disjunction);
    let inner = body.child(1).child(0);
    let entry = info.get(&inner).unwrap();
    assert_eq!(entry.superordinate, [v("x"), v("z"), v("w")]);
    assert!(entry.under_disjunction);
}

#[test]
fn clean_renames_bound_variables() {
    let vocab = voc("P/1,R/1");
    let f = parse_formula("(E x P(x) & E x R(x))", &vocab).unwrap();
    assert_eq!(make_clean(&f).to_string(), "(E x P(x) & E x1 R(x1))");
    let g = parse_formula("E x E x P(x)", &vocab).unwrap();
    assert_eq!(make_clean(&g).to_string(), "E x E x1 P(x1)");
    let h = parse_formula("P(x)", &vocab).unwrap();
    assert_eq!(make_clean(&h), h);
}

#[test]
fn bloating_and_expansion() {
    let m = Model::new(voc("R/1"), 1).unwrap();
    let b = m.bloat(2).unwrap();
    assert_eq!(b.size(), 3);
    assert_eq!(b.fresh_elements().len(), 2);
    assert_eq!(m.bloat(1).unwrap().bloat(1).unwrap(), b);
    assert_eq!(m.bloat(0), Err(StructureError::EmptyBloat));

    let y = m.expand_unary("Y", &[e(0)].into()).unwrap();
    assert!(y.holds("Y", &[e(0)]));
    assert!(m.expand_unary("Y", &BTreeSet::new()).is_ok());
    assert!(m.expand_unary("R", &BTreeSet::new()).is_err());
}

#[test]
fn word_models() {
    let empty = word_to_model("", &['a', 'b']).unwrap();
    assert_eq!(empty.size(), 1);
    assert!(empty.relation("Succ").unwrap().is_empty());
    let a = word_to_model("a", &['a', 'b']).unwrap();
    assert!(a.holds("P_a", &[e(1)]) && a.holds("Succ", &[e(0), e(1)]));
    assert!(a.relation("P_b").unwrap().is_empty());
}

#[test]
fn model_counts() {
    let count = |text: &str, n| enumerate_models(&voc(text), n, MODEL_CAP).unwrap().count();
    assert_eq!(count("P/1", 1), 2);
    assert_eq!(count("P/1", 2), 4);
    assert_eq!(count("E/2", 2), 16);
}

#[test]
fn team_operations() {
    let unit = Team::unit();
    let both = unit.extend_const(&v("x"), &[e(0), e(1)].into());
    assert_eq!(both, team(&["x"], &[&[0], &[1]]));
    let empty = Team::empty([v("y")]);
    assert!(empty.extend_with(&v("x"), |_| BTreeSet::new(), false).unwrap().is_empty());

    let t = team(&["x", "y"], &[&[0, 1], &[1, 1]]);
    assert_eq!(t.rel_projection(&[v("y")]).unwrap(), [vec![e(1)]].into());
    assert_eq!(t.rel_projection(&[v("x"), v("y")]).unwrap().len(), 2);

    let g = team(&["y", "x"], &[&[0, 0], &[0, 1], &[1, 0]]);
    let groups = g.group_by(&[v("y")]).unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0].1.len(), 2);
    assert_eq!(g.group_by(&[]).unwrap().len(), 1);
    assert!(Team::empty([v("x")]).group_by(&[v("x")]).unwrap().is_empty());
}

#[test]
fn quantifier_membership_and_derivation() {
    let d2: Vec<Element> = vec![e(0), e(1)];
    assert!(Quantifier::exists().member_set(&d2, &[e(1)].into()).unwrap());
    assert!(!Quantifier::forall().member_set(&d2, &[e(1)].into()).unwrap());
    let rel = [vec![e(0), e(0)], vec![e(0), e(1)]].into();
    assert!(!Quantifier::dependence(2).member(&d2, &[rel]).unwrap());

    let dual = derive(&Quantifier::exists(), DeriveMode::Dual).unwrap();
    let prime = derive(&Quantifier::exists(), DeriveMode::Prime).unwrap();
    let subsets: [BTreeSet<Element>; 4] = [[].into(), [e(0)].into(), [e(1)].into(), [e(0), e(1)].into()];
    let d: Vec<bool> = subsets.iter().map(|b| dual.member_set(&d2, b).unwrap()).collect();
    let p: Vec<bool> = subsets.iter().map(|b| prime.member_set(&d2, b).unwrap()).collect();
    assert_eq!(d, [false, false, false, true]);
    assert_eq!(p, [true, true, true, false]);

    assert!(check_monotone(&Quantifier::majority(), 4).unwrap());
    assert!(!check_monotone(&Quantifier::exactly(1), 4).unwrap());
}

#[test]
fn induced_and_general_atoms() {
    let m = Model::new(Vocabulary::new(), 2).unwrap();
    let t = team(&["y", "x"], &[&[0, 0], &[0, 1], &[1, 0]]);
    assert!(induced_atom_holds(&Quantifier::exists(), &[v("y")], &v("x"), &m, &t).unwrap());
    assert!(!induced_atom_holds(&Quantifier::forall(), &[v("y")], &v("x"), &m, &t).unwrap());
    let none = Team::empty([v("y"), v("x")]);
    assert!(induced_atom_holds(&Quantifier::forall(), &[v("y")], &v("x"), &m, &none).unwrap());

    let d2 = Quantifier::dependence(2);
    let xy = [vec![v("x"), v("y")]];
    assert!(general_atom_holds(&d2, &xy, &m, &team(&["x", "y"], &[&[0, 0], &[1, 0]])).unwrap());
    assert!(!general_atom_holds(&d2, &xy, &m, &team(&["x", "y"], &[&[0, 0], &[0, 1]])).unwrap());
    let d1 = Quantifier::dependence(1);
    assert!(general_atom_holds(&d1, &[vec![v("x")]], &m, &Team::empty([v("x")])).unwrap());
}

#[test]
fn tarski_and_team_evaluation() {
    let vocab = voc("P/1");
    let m = Model::new(vocab.clone(), 2).unwrap().with("P", &[&[1]]).unwrap();
    let s = Assignment::empty();
    let f = |t: &str| parse_formula(t, &vocab).unwrap();
    assert!(eval_tarski(&m, &s, &f("E x P(x)")).unwrap());
    assert!(!eval_tarski(&m, &s, &f("Q{majority} x P(x)")).unwrap());
    let all = Model::new(vocab.clone(), 2).unwrap().with("P", &[&[0], &[1]]).unwrap();
    assert!(eval_tarski(&all, &s, &f("Q{majority} x P(x)")).unwrap());

    let cfg = EvalConfig::default();
    let two = team(&["x"], &[&[0], &[1]]);
    assert_eq!(eval_team(&m, &two, &f("=(x)"), &cfg).unwrap(), Outcome::False);
    let none = Team::empty([v("x"), v("y")]);
    assert_eq!(eval_team(&m, &none, &f("inc(x;y)"), &cfg).unwrap(), Outcome::True);
    let diag = team(&["x", "y"], &[&[0, 0], &[1, 1]]);
    assert_eq!(eval_team(&m, &diag, &f("perp(x;;y)"), &cfg).unwrap(), Outcome::False);

    let one = Model::new(Vocabulary::new(), 1).unwrap();
    let ix = parse_formula("I w E x E z ~x=z", &Vocabulary::new()).unwrap();
    let r = Evaluator::new(Registry::builtin(), cfg.with_budget(1))
        .team(&one, &Team::unit(), &ix)
        .unwrap();
    assert_eq!((r.outcome, r.least_bloat), (Outcome::True, Some(1)));

    assert!(is_flat(&f("A x (P(x) | ~P(x))")));
    assert!(!is_flat(&f("E x (=(x) & P(x))")));
    assert!(is_flat(&f("Q{majority} x P(x)")));
}

#[test]
fn translations() {
    let vocab = voc("P/1,Y/1");
    let f = |t: &str| parse_formula(t, &vocab).unwrap();
    let reg = Registry::builtin();

    let star = |t: &str| star_translate(&f(t), &reg).unwrap().output.to_string();
    assert_eq!(star("E x P(x)"), "A x ((iatom{exists}(;x) & P(x)) | iatom{exists_prime}(;x))");
    assert_eq!(
        star("Q{majority} x P(x)"),
        "A x ((iatom{majority}(;x) & P(x)) | iatom{majority_prime}(;x))"
    );

    let elim = |t: &str| eliminate_dependence_atoms(&f(t), ElimOptions::default()).to_string();
    assert_eq!(elim("=(x,y)"), "perp(y;x;y)");
    assert_eq!(elim("P(x)"), "P(x)");
    assert_eq!(elim("E x =(z,x)"), "E x perp(x;z;x)");
    assert_eq!(elim("=(x)"), "=(x)");

    let p = TyParams::default();
    assert_eq!(translate_ty(&f("E x Y(x)"), &p).unwrap().to_string(), "E x (perp(x;;y) & inc(x;y))");
    assert_eq!(
        translate_ty(&f("A x (Y(x) | ~Y(x))"), &p).unwrap().to_string(),
        "A x E v (perp(v;x;y) & ((inc(x;y) & v=u) | (exc(x;y) & v=u')))"
    );
    assert_eq!(
        wrap_ty(&f("E x Y(x)"), &p).unwrap().to_string(),
        "E u E u' (~u=u' & (=(u) & (=(u') & E x (perp(x;;y) & inc(x;y)))))"
    );
    assert!(matches!(
        translate_ty(&f("E y Y(y)"), &p),
        Err(TransformError::ParamNotFresh(_))
    ));
}

#[test]
fn wrapped_sentences_on_a_two_element_model() {
    let vocab = voc("Y/1");
    let p = TyParams::default();
    let m = Model::new(Vocabulary::new(), 2).unwrap();
    let s: BTreeSet<Element> = [e(0)].into();
    let team = Team::unit().extend_const(&p.y, &s);
    let expanded = m.expand_unary("Y", &s).unwrap();
    let cfg = EvalConfig::default();
    for (text, expected) in [("E x Y(x)", true), ("A x Y(x)", false)] {
        let chi = parse_formula(text, &vocab).unwrap();
        let lhs = eval_team(&expanded, &Team::unit(), &chi, &cfg).unwrap();
        let rhs = eval_team(&m, &team, &wrap_ty(&chi, &p).unwrap(), &cfg).unwrap();
        assert_eq!((lhs.is_true(), rhs.is_true()), (expected, expected), "{text}");
    }
}
