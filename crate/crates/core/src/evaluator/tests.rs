use super::*;
use crate::quantifiers::Quantifier;
use crate::structures::enumerate_models;
use crate::syntax::{parse_formula, Vocabulary};

fn vocab() -> Vocabulary {
    Vocabulary::parse("P/1,E/2").unwrap()
}

fn f(text: &str) -> Formula {
    parse_formula(text, &vocab()).unwrap()
}

fn model(n: usize, p: &[u32]) -> Model {
    let rows: Vec<&[u32]> = p.iter().map(std::slice::from_ref).collect();
    Model::new(vocab(), n).unwrap().with("P", &rows).unwrap()
}

fn team(vars: &[&str], rows: &[&[u32]]) -> Team {
    let vars: Vec<Var> = vars.iter().map(|v| Var::from(*v)).collect();
    Team::from_rows(
        &vars,
        rows.iter().map(|r| r.iter().map(|&i| Element::Base(i)).collect()),
    )
    .unwrap()
}

/// Every team over `vars` on a domain of size `n`.
fn all_teams(vars: &[&str], n: u32) -> Vec<Team> {
    let mut rows: Vec<Vec<u32>> = vec![vec![]];
    for _ in vars {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                (0..n).map(move |a| {
                    let mut r = r.clone();
                    r.push(a);
                    r
                })
            })
            .collect();
    }
    (0u64..1 << rows.len())
        .map(|s| {
            let chosen: Vec<&[u32]> = (0..rows.len())
                .filter(|i| s >> i & 1 == 1)
                .map(|i| rows[i].as_slice())
                .collect();
            team(vars, &chosen)
        })
        .collect()
}

fn eval(m: &Model, t: &Team, text: &str, cfg: &EvalConfig) -> Outcome {
    eval_team(m, t, &f(text), cfg).unwrap()
}

#[test]
fn tarski_examples() {
    let s = Assignment::empty();
    assert!(eval_tarski(&model(2, &[1]), &s, &f("E x P(x)")).unwrap());
    assert!(!eval_tarski(&model(2, &[1]), &s, &f("Q{majority} x P(x)")).unwrap());
    assert!(eval_tarski(&model(2, &[0, 1]), &s, &f("Q{majority} x P(x)")).unwrap());
}

#[test]
fn tarski_errors() {
    let s = Assignment::empty();
    assert_eq!(
        eval_tarski(&model(2, &[]), &s, &f("P(x)")),
        Err(EvalError::UnboundVariable(Var::from("x")))
    );
    assert_eq!(
        eval_tarski(&model(2, &[]), &s, &f("E x =(x)")),
        Err(EvalError::NotFirstOrder)
    );
}

#[test]
fn constancy_fails_on_two_values() {
    let t = team(&["x"], &[&[0], &[1]]);
    assert_eq!(eval(&model(2, &[]), &t, "=(x)", &EvalConfig::default()), Outcome::False);
}

#[test]
fn empty_team_satisfies_inclusion() {
    let t = Team::empty([Var::from("x"), Var::from("y")]);
    assert!(eval(&model(2, &[]), &t, "inc(x;y)", &EvalConfig::default()).is_true());
}

#[test]
fn i_bloats_the_domain() {
    let cfg = EvalConfig::default().with_budget(1);
    let m = model(1, &[]);
    let report = Evaluator::new(Registry::builtin(), cfg)
        .team(&m, &Team::unit(), &f("I w E x E z ~x=z"))
        .unwrap();
    assert_eq!(report.outcome, Outcome::True);
    assert_eq!(report.least_bloat, Some(1));
}

#[test]
fn i_budget_exhaustion_is_unknown() {
    // Three distinct elements need two fresh ones on a one-element domain.
    let text = "I w E x E y E z (~x=y & (~y=z & ~x=z))";
    let m = model(1, &[]);
    let one = eval(&m, &Team::unit(), text, &EvalConfig::default().with_budget(1));
    assert_eq!(one, Outcome::Unknown);
    let two = Evaluator::new(Registry::builtin(), EvalConfig::default().with_budget(2))
        .team(&m, &Team::unit(), &f(text))
        .unwrap();
    assert_eq!(two.outcome, Outcome::True);
    assert_eq!(two.least_bloat, Some(2));
    assert_eq!(
        eval(&m, &Team::unit(), text, &EvalConfig::default().with_budget(0)),
        Outcome::Unknown
    );
}

#[test]
fn pure_independence_needs_the_cross_row() {
    let t = team(&["x", "y"], &[&[0, 0], &[1, 1]]);
    assert_eq!(eval(&model(2, &[]), &t, "perp(x;;y)", &EvalConfig::default()), Outcome::False);
    let full = team(&["x", "y"], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
    assert!(eval(&model(2, &[]), &full, "perp(x;;y)", &EvalConfig::default()).is_true());
}

#[test]
fn flatness_classification() {
    assert!(is_flat(&f("A x (P(x) | ~P(x))")));
    assert!(!is_flat(&f("E x (=(x) & P(x))")));
    assert!(is_flat(&f("Q{majority} x P(x)")));
}

#[test]
fn unbound_and_unknown_errors() {
    let t = team(&["x"], &[&[0]]);
    let m = model(2, &[]);
    assert_eq!(
        eval_team(&m, &t, &f("P(y)"), &EvalConfig::default()),
        Err(EvalError::UnboundVariable(Var::from("y")))
    );
    let other = Model::new(Vocabulary::parse("R/1").unwrap(), 2).unwrap();
    assert_eq!(
        eval_team(&other, &t, &f("P(x)"), &EvalConfig::default()),
        Err(EvalError::UndeclaredSymbol("P".into()))
    );
}

#[test]
fn cap_exceeded_is_an_error() {
    let cfg = EvalConfig {
        max_steps: 3,
        ..EvalConfig::naive()
    };
    let t = all_teams(&["x"], 2).pop().unwrap();
    let r = eval_team(&model(2, &[0]), &t, &f("E y (=(y) & (P(x) | P(y)))"), &cfg);
    assert!(matches!(r, Err(EvalError::CapExceeded(_))));
}

#[test]
fn disjunction_allows_overlap() {
    // Both disjuncts need the row x=0; only an overlapping cover works.
    let t = team(&["x"], &[&[0], &[1]]);
    let m = model(2, &[]);
    let phi = "E y ((=(y) & inc(y;x)) | (=(y) & inc(x;y)))";
    for cfg in [EvalConfig::naive(), EvalConfig::default()] {
        assert!(eval(&m, &t, phi, &cfg).is_true());
    }
}

#[test]
fn non_monotone_quantifier_in_team_semantics() {
    // Exactly one element: with lax semantics the body's team is U[f/x]
    // where every f(s) must have exactly one element.
    let mut reg = Registry::builtin();
    reg.insert(Quantifier::exactly(1));
    let phi = parse_formula("Q{exactly_1} x (P(x) | ~P(x))", &vocab()).unwrap();
    for cfg in [EvalConfig::naive(), EvalConfig::default()] {
        let ev = Evaluator::new(reg.clone(), cfg);
        let m = model(2, &[0]);
        let r = ev.team(&m, &Team::unit(), &phi).unwrap();
        assert_eq!(r.outcome, Outcome::True);
        assert!(!ev.tarski(&m, &Assignment::empty(), &phi).unwrap());
    }
}

const TEMPLATES: &[&str] = &[
    "(P(x) | ~P(x))",
    "=(x,y)",
    "=(y)",
    "(=(x) | =(y))",
    "(=(x,y) | P(y))",
    "E z (=(z) & (E(x,z) | E(y,z)))",
    "A z (E(x,z) | =(y))",
    "E z (inc(z;x) & =(y,z))",
    "inc(x;y)",
    "exc(x;y)",
    "(inc(x;y) | exc(x;y))",
    "perp(x;;y)",
    "perp(x;y;x)",
    "E z (perp(z;;x) & ~z=y)",
    "Q{majority} z (E(x,z) | =(y))",
    "Qd{majority} z (P(z) | =(x))",
    "iatom{majority}(x;y)",
    "E z (iatom{majority}(z;x) & E(z,y))",
    "(A z E(x,z) | E z (~x=z & inc(z;y)))",
    "E u E v ((inc(u;x) & inc(v;y)) & (=(u) | ~u=v))",
    "gatom{D_2}(x,y)",
    "((P(x) & =(y)) | (~P(x) & inc(y;x)))",
];

/// The plain clause search, the pruned search, and the SAT encoding agree.
#[test]
fn engines_agree() {
    let no_sat = EvalConfig {
        heuristics: Heuristics {
            sat: false,
            ..Heuristics::all()
        },
        ..EvalConfig::default()
    };
    let no_memo = EvalConfig {
        memo: false,
        ..EvalConfig::default()
    };
    let mut reg = Registry::builtin();
    reg.insert(Quantifier::dependence(2));
    let cfgs = [EvalConfig::naive(), no_sat, no_memo, EvalConfig::default()];
    for text in TEMPLATES {
        let phi = parse_formula(text, &vocab()).unwrap();
        for n in 1..=2 {
            let teams = all_teams(&["x", "y"], n as u32);
            for m in enumerate_models(&vocab(), n, 1 << 10).unwrap() {
                let prepared: Vec<Prepared> = cfgs
                    .iter()
                    .map(|c| {
                        Evaluator::new(reg.clone(), c.clone())
                            .prepare(&phi, &[Var::from("x"), Var::from("y")])
                            .unwrap()
                    })
                    .collect();
                for t in &teams {
                    let results: Vec<Outcome> = prepared
                        .iter()
                        .map(|p| p.eval(&m, t).unwrap().outcome)
                        .collect();
                    assert!(
                        results.iter().all(|r| *r == results[0]),
                        "{text} on {m} with {t}: {results:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn trace_lists_witnesses() {
    let cfg = EvalConfig {
        trace: true,
        ..EvalConfig::default()
    };
    let t = team(&["x"], &[&[0], &[1]]);
    let r = Evaluator::new(Registry::builtin(), cfg)
        .team(&model(2, &[0]), &t, &f("E y (=(y) & ~y=x)"))
        .unwrap();
    assert_eq!(r.outcome, Outcome::False);
    let r = Evaluator::new(
        Registry::builtin(),
        EvalConfig {
            trace: true,
            ..EvalConfig::default()
        },
    )
    .team(&model(2, &[0]), &t, &f("E y (=(x,y) & ~y=x)"))
    .unwrap();
    assert!(r.outcome.is_true());
    assert!(r.trace.iter().any(|l| l.starts_with("choose")), "{:?}", r.trace);
}

#[test]
fn packed_atom_checks_match_hashing() {
    let atoms = [
        "=(x,y)",
        "=(x)",
        "inc(x;y)",
        "exc(x,y;y,z)",
        "perp(x;;y)",
        "perp(x;z;y)",
        "perp(x,y;z;y)",
        "iatom{majority}(x;y)",
        "iatom{exists_prime}(;z)",
        "gatom{D_3}(x,y,z)",
    ];
    let vars = [Var::from("x"), Var::from("y"), Var::from("z")];
    for text in atoms {
        let phi = f(text);
        let c = compile::Compiled::compile(&phi, &vars, &Registry::builtin()).unwrap();
        let m = model(2, &[]);
        let cm = CModel::new(&m, &c).unwrap();
        let all: Vec<Row> = (0..8u8)
            .map(|i| {
                let mut r = [UNSET; compile::MAX_VARS];
                for (k, v) in vars.iter().enumerate() {
                    r[c.slot(v) as usize] = i >> k & 1;
                }
                r
            })
            .collect();
        let mut scratch = atoms::Scratch::default();
        for mask in 0u32..256 {
            let rows: Vec<Row> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            let fast = atoms::fast(&mut scratch, &c, c.root, &cm, &rows).unwrap();
            assert_eq!(fast, atoms::slow(&c, c.root, &cm, &rows), "{text} on {mask:08b}");
        }
    }
}
