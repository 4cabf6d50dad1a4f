use std::collections::BTreeSet;
use std::fmt;

use super::{
    agree, closed_under_y, enumerate_teams, is_suitable_pair, is_y_extension_brute_force,
    Counterexample, Instance, OracleError, Side,
};
use crate::evaluator::{
    is_flat, CandidateRows, EvalConfig, Evaluator, Heuristics, Outcome, Prepared, Session,
};
use crate::lre::{eval_lre, LreConfig, LreResult, LreSentence, PERFECT_MATCHING};
use crate::quantifiers::{check_monotone, derive, unary_equal_up_to, DeriveMode, Quantifier, Registry};
use crate::structures::{
    encode_model, enumerate_models, model_to_word, word_to_model, Element, Model, MODEL_CAP,
};
use crate::syntax::{parse_formula, to_nnf, Formula, NnfOptions, Parser, Position, Var, Vocabulary};
use crate::teams::{Assignment, Team};
use crate::transforms::{
    eliminate_dependence_atoms, star_translate, wrap_ty, ElimOptions, TyParams,
};

const CORPORA: &[(&str, &str)] = &[
    ("flat", include_str!("../../corpus/flat.txt")),
    ("lemma2", include_str!("../../corpus/lemma2.txt")),
    ("star_exists", include_str!("../../corpus/star_exists.txt")),
    ("star_forall", include_str!("../../corpus/star_forall.txt")),
    ("star_majority", include_str!("../../corpus/star_majority.txt")),
];

/// The formulas of a shipped corpus, without comments and blank lines.
pub fn corpus(name: &str) -> Option<Vec<&'static str>> {
    let (_, text) = CORPORA.iter().find(|(n, _)| *n == name)?;
    Some(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect(),
    )
}

pub const EQUIVALENCE_SUITES: &[&str] = &["flatness", "lemma2", "star", "dep-elim", "ix-chain"];

pub const INVARIANT_SUITES: &[&str] = &[
    "team-count",
    "suitable-pair",
    "quantifier-algebra",
    "empty-team",
    "downward-closure",
    "memo",
    "encoding",
    "lre-parity",
    "lre-budget",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteConfig {
    /// Largest model domain.
    pub max_size: usize,
    /// Bloat budget for `I`.
    pub budget: usize,
    pub memo: bool,
}

impl Default for SuiteConfig {
    fn default() -> SuiteConfig {
        SuiteConfig {
            max_size: 3,
            budget: 2,
            memo: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub checked: u64,
    /// First disagreement of an equivalence sweep.
    pub counterexample: Option<Counterexample>,
    /// Failed checks that are not a disagreement between two sides.
    pub violations: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> SuiteReport {
        SuiteReport {
            name: name.to_string(),
            checked: 0,
            counterexample: None,
            violations: Vec::new(),
        }
    }

    pub fn failures(&self) -> usize {
        self.counterexample.is_some() as usize + self.violations.len()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(what());
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "suite {}: checked {} instances, {} counterexamples",
            self.name,
            self.checked,
            self.failures()
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n{c}")?;
        }
        for v in &self.violations {
            write!(f, "\nviolation: {v}")?;
        }
        Ok(())
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, OracleError> {
    let mut out = SuiteReport::new(name);
    match name {
        "flatness" => flatness(cfg, &mut out)?,
        "lemma2" => lemma2(cfg, &mut out)?,
        "star" => star(cfg, &mut out)?,
        "dep-elim" => dep_elim(cfg, &mut out)?,
        "ix-chain" => ix_chain(cfg, &mut out)?,
        "team-count" => team_count(cfg, &mut out)?,
        "suitable-pair" => suitable_pair(&mut out)?,
        "quantifier-algebra" => quantifier_algebra(&mut out)?,
        "empty-team" => empty_team(cfg, &mut out)?,
        "downward-closure" => downward_closure(cfg, &mut out)?,
        "memo" => memo(cfg, &mut out)?,
        "encoding" => encoding(&mut out)?,
        "lre-parity" => lre_parity(cfg, &mut out)?,
        "lre-budget" => lre_budget(&mut out)?,
        _ => return Err(OracleError::UnknownSuite(name.to_string())),
    }
    Ok(out)
}

fn vocab(text: &str) -> Vocabulary {
    Vocabulary::parse(text).expect("valid vocabulary")
}

fn load(name: &str, vocab: &Vocabulary, reg: &Registry) -> Result<Vec<Formula>, OracleError> {
    let lines = corpus(name).ok_or_else(|| OracleError::UnknownSuite(name.to_string()))?;
    lines
        .into_iter()
        .map(|line| {
            Parser::new(vocab, reg).parse(line).map_err(|e| OracleError::Corpus {
                corpus: name.to_string(),
                line: line.to_string(),
                error: e.to_string(),
            })
        })
        .collect()
}

fn corpus_error(corpus: &str, phi: &Formula, error: &str) -> OracleError {
    OracleError::Corpus {
        corpus: corpus.to_string(),
        line: phi.to_string(),
        error: error.to_string(),
    }
}

/// Models of size `n` over the symbols of `vocab` that `phi` uses. Symbols
/// a formula does not mention cannot change its value.
fn models_for(
    vocab: &Vocabulary,
    phi: &Formula,
    n: usize,
) -> Result<impl Iterator<Item = Model>, OracleError> {
    let used = phi.relation_symbols();
    Ok(enumerate_models(&vocab.restrict(&used), n, MODEL_CAP)?)
}

/// All `k`-tuples of positions in `0..n`, lexicographic.
fn position_rows(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut rows = vec![Vec::new()];
    for _ in 0..k {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                (0..n as u8).map(move |a| {
                    let mut r = r.clone();
                    r.push(a);
                    r
                })
            })
            .collect();
    }
    rows
}

fn chosen(rows: &[Vec<u8>], mask: u64) -> impl Iterator<Item = &[u8]> {
    rows.iter()
        .enumerate()
        .filter(move |(j, _)| mask >> j & 1 == 1)
        .map(|(_, r)| r.as_slice())
}

fn team_at(model: &Model, vars: &[Var], rows: &[Vec<u8>], mask: u64) -> Team {
    let d = model.domain();
    Team::from_rows(
        vars,
        chosen(rows, mask).map(|r| r.iter().map(|&a| d[a as usize]).collect()),
    )
    .expect("rows match vars")
}

fn assignment(model: &Model, vars: &[Var], row: &[u8]) -> Assignment {
    Assignment(
        vars.iter()
            .cloned()
            .zip(row.iter().map(|&a| model.domain()[a as usize]))
            .collect(),
    )
}

fn attach(inst: impl FnOnce() -> Instance) -> impl FnOnce(crate::evaluator::EvalError) -> OracleError {
    move |e| OracleError::OnInstance {
        instance: inst().to_string(),
        error: Box::new(e.into()),
    }
}

fn team_outcome(
    s: &mut Session<'_>,
    vars: &[Var],
    rows: &[Vec<u8>],
    mask: u64,
    model: &Model,
) -> Result<Outcome, OracleError> {
    s.eval_positions(vars, chosen(rows, mask))
        .map(|r| r.outcome)
        .map_err(attach(|| Instance {
            model: model.clone(),
            team: team_at(model, vars, rows, mask),
            set: None,
        }))
}

/// A session whose candidate rows are compiled once, for sweeping every
/// subteam of `rows` on one model.
struct Sweep<'p, 'm> {
    session: Session<'p>,
    cand: CandidateRows,
    model: &'m Model,
    vars: &'m [Var],
    rows: &'m [Vec<u8>],
}

impl<'p, 'm> Sweep<'p, 'm> {
    fn new(
        p: &'p Prepared,
        model: &'m Model,
        vars: &'m [Var],
        rows: &'m [Vec<u8>],
    ) -> Result<Sweep<'p, 'm>, OracleError> {
        let session = p.session(model)?;
        let cand = session.candidate_rows(vars, rows)?;
        Ok(Sweep {
            session,
            cand,
            model,
            vars,
            rows,
        })
    }

    fn at(&mut self, mask: u64) -> Result<Outcome, OracleError> {
        let (model, vars, rows) = (self.model, self.vars, self.rows);
        self.session.eval_mask(&mut self.cand, mask).map_err(attach(|| Instance {
            model: model.clone(),
            team: team_at(model, vars, rows, mask),
            set: None,
        }))
    }
}

fn bool_outcome(b: bool) -> Outcome {
    if b {
        Outcome::True
    } else {
        Outcome::False
    }
}

fn suite_eval_config(cfg: &SuiteConfig) -> EvalConfig {
    EvalConfig {
        memo: cfg.memo,
        bloat_budget: cfg.budget,
        ..EvalConfig::default()
    }
}

/// Team semantics against pointwise Tarskian truth for flat formulas. The
/// team side runs the clause search with only downward-closure pruning, so
/// no shortcut that presupposes flatness is involved.
fn flatness(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let voc = vocab("P/1,E/2");
    let reg = Registry::builtin();
    let eval_cfg = EvalConfig {
        heuristics: Heuristics {
            dc_pruning: true,
            ..Heuristics::none()
        },
        ..suite_eval_config(cfg)
    };
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    for phi in load("flat", &voc, &reg)? {
        if !is_flat(&phi) {
            return Err(corpus_error("flat", &phi, "not flat"));
        }
        let vars: Vec<Var> = phi.free_vars().into_iter().collect();
        let p = ev.prepare(&phi, &vars)?;
        for n in 1..=cfg.max_size {
            let rows = position_rows(n, vars.len());
            for model in models_for(&voc, &phi, n)? {
                let mut good = 0u64;
                for (j, r) in rows.iter().enumerate() {
                    if p.tarski(&model, &assignment(&model, &vars, r))? {
                        good |= 1 << j;
                    }
                }
                let mut sweep = Sweep::new(&p, &model, &vars, &rows)?;
                for mask in 0..1u64 << rows.len() {
                    let lhs = sweep.at(mask)?;
                    let rhs = bool_outcome(mask & !good == 0);
                    out.checked += 1;
                    if !agree(lhs, rhs) {
                        out.counterexample = Some(Counterexample {
                            instance: Instance {
                                model: model.clone(),
                                team: team_at(&model, &vars, &rows, mask),
                                set: None,
                            },
                            lhs: Side::Team(phi.clone()),
                            rhs: Side::Pointwise(phi),
                            lhs_value: lhs,
                            rhs_value: rhs,
                            cfg: eval_cfg,
                        });
                        return Ok(());
                    }
                }
            }
        }
    }
    Ok(())
}

/// Every nonempty subset of `0..n` as elements, by counter order.
fn nonempty_sets(model: &Model) -> Vec<BTreeSet<Element>> {
    let d = model.domain();
    (1u32..1 << d.len())
        .map(|m| (0..d.len()).filter(|i| m >> i & 1 == 1).map(|i| d[i]).collect())
        .collect()
}

fn lemma2_corpus(reg: &Registry) -> Result<Vec<Formula>, OracleError> {
    let formulas = load("lemma2", &vocab("P/1,Y/1"), reg)?;
    for chi in &formulas {
        if !chi.is_sentence() || !chi.is_dependence_logic() {
            return Err(corpus_error("lemma2", chi, "not a dependence logic sentence"));
        }
    }
    Ok(formulas)
}

/// `(A, Y ↦ S) ⊨ χ` against `A, {∅}[S/y] ⊨ wrap_ty(χ)` for `|A| ≥ 2`.
fn lemma2(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let params = TyParams::default();
    let base = vocab("P/1");
    let eval_cfg = suite_eval_config(cfg);
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    let y = std::slice::from_ref(&params.y);
    for chi in lemma2_corpus(&reg)? {
        let wrapped = wrap_ty(&chi, &params)?;
        let pl = ev.prepare(&chi, &[])?;
        let pr = ev.prepare(&wrapped, y)?;
        for n in 2..=cfg.max_size {
            for model in models_for(&base, &wrapped, n)? {
                let mut sr = pr.session(&model)?;
                for set in nonempty_sets(&model) {
                    let inst = || Instance {
                        model: model.clone(),
                        team: Team::from_rows(y, set.iter().map(|&a| vec![a])).expect("one var"),
                        set: Some(set.clone()),
                    };
                    let expanded = model.expand_unary(&params.symbol, &set)?;
                    let lhs = pl.eval(&expanded, &Team::unit()).map_err(attach(inst))?.outcome;
                    let rows: Vec<[u8; 1]> = set
                        .iter()
                        .map(|a| [model.domain().iter().position(|d| d == a).expect("in A") as u8])
                        .collect();
                    let rhs = sr
                        .eval_positions(y, rows.iter().map(|r| r.as_slice()))
                        .map_err(attach(inst))?
                        .outcome;
                    out.checked += 1;
                    if !agree(lhs, rhs) {
                        out.counterexample = Some(Counterexample {
                            instance: inst(),
                            lhs: Side::Expanded {
                                formula: chi,
                                symbol: params.symbol.clone(),
                            },
                            rhs: Side::Team(wrapped),
                            lhs_value: lhs,
                            rhs_value: rhs,
                            cfg: eval_cfg,
                        });
                        return Ok(());
                    }
                }
            }
        }
    }
    Ok(())
}

/// `χ ⇔ χ*` on every team over the free variables, and `χ*` has no `∃`
/// and no generalized quantifier.
fn star(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let voc = vocab("P/1,E/2");
    let reg = Registry::builtin();
    let eval_cfg = suite_eval_config(cfg);
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    for name in ["star_exists", "star_forall", "star_majority"] {
        for chi in load(name, &voc, &reg)? {
            if !chi.is_fo_q() {
                return Err(corpus_error(name, &chi, "not first-order"));
            }
            let st = star_translate(&chi, &reg)?;
            let existential =
                st.output.count(|f| matches!(f, Formula::Exists(..) | Formula::GenQuant { .. }));
            out.check(existential == 0, || {
                format!("{} has {existential} existential or generalized quantifiers", st.output)
            });
            let vars: Vec<Var> = chi.free_vars().into_iter().collect();
            let pl = ev.prepare(&chi, &vars)?;
            let pr = ev.prepare(&st.output, &vars)?;
            for n in 1..=cfg.max_size {
                let rows = position_rows(n, vars.len());
                for model in models_for(&voc, &chi, n)? {
                    let mut sl = Sweep::new(&pl, &model, &vars, &rows)?;
                    let mut sr = Sweep::new(&pr, &model, &vars, &rows)?;
                    for mask in 0..1u64 << rows.len() {
                        let lhs = sl.at(mask)?;
                        let rhs = sr.at(mask)?;
                        out.checked += 1;
                        if !agree(lhs, rhs) {
                            out.counterexample = Some(Counterexample {
                                instance: Instance {
                                    model: model.clone(),
                                    team: team_at(&model, &vars, &rows, mask),
                                    set: None,
                                },
                                lhs: Side::Team(chi),
                                rhs: Side::Team(st.output),
                                lhs_value: lhs,
                                rhs_value: rhs,
                                cfg: eval_cfg,
                            });
                            return Ok(());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

const DEP_ELIM_TEMPLATES: &[&str] = &[
    "(=(x,y) | P(x))",
    "E z (=(y,z) & (P(z) | z=x))",
    "A z (=(x,z,y) | P(z))",
    "(=(x,y) & (=(y,x) | ~x=y))",
    "E z (=(x,y,z) & (~z=x & ~z=y))",
];

/// `=(x̄,y) ⇔ perp(y;x̄;y)` and `~=(x̄,y) ⇔ empty team` on every team over
/// `x̄,y` with `|x̄| ≤ 2`, then the rewrite applied inside formulas.
fn dep_elim(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    // Atoms need no search, and hardly any team repeats across the sweep.
    let eval_cfg = EvalConfig {
        memo: false,
        heuristics: Heuristics {
            flat_fast_path: true,
            ..Heuristics::none()
        },
        ..suite_eval_config(cfg)
    };
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    let empty = Vocabulary::new();
    let unary = ElimOptions { unary: true };
    for k in 0..=2 {
        let names: Vec<&str> = ["x1", "x2"][..k].iter().copied().chain(["y"]).collect();
        let vars: Vec<Var> = names.iter().map(|v| Var::from(*v)).collect();
        let dep = Formula::Dep(vars.clone());
        let perp = eliminate_dependence_atoms(&dep, unary);
        let raw = Parser::new(&empty, &reg)
            .permissive(true)
            .parse_raw(&format!("~=({})", names.join(",")))?;
        let neg = to_nnf(
            raw,
            NnfOptions {
                rewrite_negated_dependence: true,
            },
        )?;
        let (pd, pp, pn) = (
            ev.prepare(&dep, &vars)?,
            ev.prepare(&perp, &vars)?,
            ev.prepare(&neg, &vars)?,
        );
        for n in 1..=cfg.max_size {
            let model = Model::new(empty.clone(), n)?;
            let rows = position_rows(n, vars.len());
            let (mut sd, mut sp, mut sn) =
                (pd.session(&model)?, pp.session(&model)?, pn.session(&model)?);
            let mut cd = sd.candidate_rows(&vars, &rows)?;
            let mut cp = sp.candidate_rows(&vars, &rows)?;
            let mut cn = sn.candidate_rows(&vars, &rows)?;
            let shared = cd.same_layout(&cp) && cd.same_layout(&cn);
            for mask in 0..1u64 << rows.len() {
                let inst = || Instance {
                    model: model.clone(),
                    team: team_at(&model, &vars, &rows, mask),
                    set: None,
                };
                let (d, p, e) = if shared {
                    let d = sd.eval_mask(&mut cd, mask).map_err(attach(inst))?;
                    let p = sp.eval_selected(&cd).map_err(attach(inst))?;
                    (d, p, sn.eval_selected(&cd).map_err(attach(inst))?)
                } else {
                    (
                        sd.eval_mask(&mut cd, mask).map_err(attach(inst))?,
                        sp.eval_mask(&mut cp, mask).map_err(attach(inst))?,
                        sn.eval_mask(&mut cn, mask).map_err(attach(inst))?,
                    )
                };
                out.checked += 2;
                let mismatch = if !agree(d, p) {
                    Some((Side::Team(dep.clone()), Side::Team(perp.clone()), d, p))
                } else if !agree(e, bool_outcome(mask == 0)) {
                    Some((Side::Team(neg.clone()), Side::EmptyTeam, e, bool_outcome(mask == 0)))
                } else {
                    None
                };
                if let Some((lhs, rhs, lhs_value, rhs_value)) = mismatch {
                    out.counterexample = Some(Counterexample {
                        instance: inst(),
                        lhs,
                        rhs,
                        lhs_value,
                        rhs_value,
                        cfg: eval_cfg,
                    });
                    return Ok(());
                }
            }
        }
    }

    let voc = vocab("P/1");
    let eval_cfg = suite_eval_config(cfg);
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    let vars = [Var::from("x"), Var::from("y")];
    for text in DEP_ELIM_TEMPLATES {
        let phi = parse_formula(text, &voc)?;
        let rewritten = eliminate_dependence_atoms(&phi, unary);
        let (pl, pr) = (ev.prepare(&phi, &vars)?, ev.prepare(&rewritten, &vars)?);
        for n in 1..=cfg.max_size {
            let rows = position_rows(n, vars.len());
            for model in models_for(&voc, &phi, n)? {
                let (mut sl, mut sr) = (pl.session(&model)?, pr.session(&model)?);
                for mask in 0..1u64 << rows.len() {
                    let lhs = team_outcome(&mut sl, &vars, &rows, mask, &model)?;
                    let rhs = team_outcome(&mut sr, &vars, &rows, mask, &model)?;
                    out.checked += 1;
                    if !agree(lhs, rhs) {
                        out.counterexample = Some(Counterexample {
                            instance: Instance {
                                model: model.clone(),
                                team: team_at(&model, &vars, &rows, mask),
                                set: None,
                            },
                            lhs: Side::Team(phi),
                            rhs: Side::Team(rewritten),
                            lhs_value: lhs,
                            rhs_value: rhs,
                            cfg: eval_cfg,
                        });
                        return Ok(());
                    }
                }
            }
        }
    }
    Ok(())
}

/// Some bloating by at most `budget` elements satisfies `χ` with `Y` the
/// fresh set, against `I y wrap_ty(χ)` on `{∅}`; models of size 2.
fn ix_chain(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let params = TyParams::default();
    let base = vocab("P/1");
    let eval_cfg = suite_eval_config(cfg);
    let ev = Evaluator::new(reg.clone(), eval_cfg.clone());
    if cfg.max_size < 2 {
        return Ok(());
    }
    for chi in lemma2_corpus(&reg)? {
        let chain = Formula::IOp(params.y.clone(), Box::new(wrap_ty(&chi, &params)?));
        let lhs_side = Side::Bloated {
            formula: chi.clone(),
            symbol: params.symbol.clone(),
        };
        let rhs_side = Side::Team(chain.clone());
        let pr = ev.prepare(&chain, &[])?;
        for model in models_for(&base, &chain, 2)? {
            let inst = Instance {
                model,
                team: Team::unit(),
                set: None,
            };
            let lhs = lhs_side.evaluate(&inst, &ev)?;
            let rhs = pr
                .eval(&inst.model, &inst.team)
                .map_err(attach(|| inst.clone()))?
                .outcome;
            out.checked += 1;
            if !agree(lhs, rhs) {
                out.counterexample = Some(Counterexample {
                    instance: inst,
                    lhs: lhs_side,
                    rhs: rhs_side,
                    lhs_value: lhs,
                    rhs_value: rhs,
                    cfg: eval_cfg,
                });
                return Ok(());
            }
        }
    }
    Ok(())
}

fn team_count(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let names = ["x", "y", "z"];
    for k in 0..=3 {
        let vars: Vec<Var> = names[..k].iter().map(|v| Var::from(*v)).collect();
        for n in 1..=cfg.max_size {
            let rows = n.pow(k as u32);
            if rows > 16 {
                continue;
            }
            let model = Model::new(Vocabulary::new(), n)?;
            let teams: Vec<Team> = enumerate_teams(&vars, model.domain(), None)?.collect();
            let distinct: BTreeSet<String> = teams.iter().map(Team::to_string).collect();
            out.check(teams.len() == 1 << rows && distinct.len() == teams.len(), || {
                format!("{} teams over {k} variables on {n} elements", teams.len())
            });
        }
    }
    Ok(())
}

fn suitable_pair(out: &mut SuiteReport) -> Result<(), OracleError> {
    let params = TyParams::default();
    let y = params.y.clone();
    let vars = [y.clone(), Var::from("z")];
    let domain: Vec<Element> = (0..3).map(Element::Base).collect();
    let sets: Vec<BTreeSet<Element>> = (0u32..8)
        .map(|m| (0..3).filter(|i| m >> i & 1 == 1).map(|i| domain[i]).collect())
        .collect();
    // Condition 3: closure against the search for a preimage.
    for v in enumerate_teams(&vars, &domain, None)? {
        if v.len() > 8 {
            continue;
        }
        for s in &sets {
            let closed = closed_under_y(&v, &y, s);
            let brute = is_y_extension_brute_force(&v, &y, s);
            out.check(closed == brute, || {
                format!("closure says {closed}, search says {brute} for {v} with |S| = {}", s.len())
            });
        }
    }

    // The four conditions on the top-level pair of a sentence.
    let chi = parse_formula("E x (Y(x) | ~Y(x))", &vocab("Y/1"))?;
    let s: BTreeSet<Element> = [Element::Base(0), Element::Base(1)].into();
    let v_vars = [y.clone(), params.u.clone(), params.u_prime.clone()];
    let v = |rows: &[[u32; 3]]| {
        Team::from_rows(
            &v_vars,
            rows.iter().map(|r| r.iter().map(|&a| Element::Base(a)).collect()),
        )
        .expect("three values")
    };
    let root = Position::root();
    let good = v(&[[0, 0, 1], [1, 0, 1]]);
    out.check(is_suitable_pair(&Team::unit(), &good, &s, &params, &chi, &root), || {
        "the canonical top-level pair is rejected".into()
    });
    out.check(
        !is_suitable_pair(&Team::unit(), &v(&[[0, 0, 1], [1, 2, 1]]), &s, &params, &chi, &root),
        || "two u-values are accepted".into(),
    );
    out.check(
        !is_suitable_pair(&Team::unit(), &v(&[[0, 0, 1], [1, 0, 1], [2, 0, 1]]), &s, &params, &chi, &root),
        || "a y-value outside S is accepted".into(),
    );
    out.check(
        !is_suitable_pair(&Team::unit(), &v(&[[0, 1, 1], [1, 1, 1]]), &s, &params, &chi, &root),
        || "equal u and u' values are accepted".into(),
    );
    // Below the disjunction the domain also carries x and v.
    let pos = Position::root().child(0).child(0);
    let x = Var::from("x");
    let inner_vars = [x.clone(), y.clone(), params.u.clone(), params.u_prime.clone(), params.v.clone()];
    let inner = Team::from_rows(
        &inner_vars,
        [[0, 0, 0, 1, 0], [0, 1, 0, 1, 0]]
            .iter()
            .map(|r| r.iter().map(|&a| Element::Base(a)).collect()),
    )?;
    let u = Team::from_rows(&[x], [vec![Element::Base(0)]])?;
    out.check(is_suitable_pair(&u, &inner, &s, &params, &chi, &pos), || {
        "the pair below the disjunction is rejected".into()
    });
    Ok(())
}

fn builtin_quantifiers() -> Vec<Quantifier> {
    let mut qs = vec![Quantifier::exists(), Quantifier::forall(), Quantifier::majority()];
    qs.extend((1..=3).map(Quantifier::at_least));
    qs.extend((1..=2).map(Quantifier::exactly));
    qs
}

fn quantifier_algebra(out: &mut SuiteReport) -> Result<(), OracleError> {
    const N: usize = 4;
    for q in builtin_quantifiers() {
        let dual = derive(&q, DeriveMode::Dual)?;
        let prime = derive(&q, DeriveMode::Prime)?;
        let dd = derive(&dual, DeriveMode::Dual)?;
        let pp = derive(&prime, DeriveMode::Prime)?;
        let name = q.name().to_string();
        out.check(unary_equal_up_to(&dd, &q, N)?, || format!("dual of dual of {name}"));
        out.check(unary_equal_up_to(&pp, &q, N)?, || format!("prime of prime of {name}"));
        let monotone = check_monotone(&q, N)?;
        out.check(!monotone || check_monotone(&dual, N)?, || {
            format!("{name} is monotone but its dual is not")
        });
    }
    let exists_dual = derive(&Quantifier::exists(), DeriveMode::Dual)?;
    out.check(unary_equal_up_to(&exists_dual, &Quantifier::forall(), N)?, || {
        "the dual of exists is not forall".into()
    });
    Ok(())
}

/// Team-atom templates over `x`, `y` and `P/1, E/2`.
const TEAM_TEMPLATES: &[&str] = &[
    "=(x,y)",
    "(=(x) | =(y))",
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
    "gatom{D_2}(x,y)",
    "((P(x) & =(y)) | (~P(x) & inc(y;x)))",
];

fn empty_team(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let ev = Evaluator::new(reg.clone(), suite_eval_config(cfg));
    let voc = vocab("P/1,E/2,Y/1");
    let mut formulas = Vec::new();
    for name in ["flat", "lemma2", "star_exists", "star_forall", "star_majority"] {
        formulas.extend(load(name, &voc, &reg)?);
    }
    for text in TEAM_TEMPLATES {
        formulas.push(parse_formula(text, &voc)?);
    }
    if cfg.budget >= 1 {
        for text in ["I w E x (=(x) & ~x=w)", "I w inc(w;x)", "(I w =(w) | P(x))"] {
            formulas.push(parse_formula(text, &voc)?);
        }
    }
    for phi in &formulas {
        let team = Team::empty(phi.free_vars());
        for n in 1..=cfg.max_size.min(2) {
            for model in models_for(&voc, phi, n)? {
                let r = ev.team(&model, &team, phi)?;
                out.check(r.outcome.is_true(), || format!("{phi} fails on the empty team"));
            }
        }
    }
    Ok(())
}

const DC_TEMPLATES: &[&str] = &[
    "=(x,y)",
    "exc(x;y)",
    "(=(x) | =(y))",
    "(exc(x;y) & P(x))",
    "(=(y) | (P(x) & =(x,y)))",
    "E z (=(x,z) & exc(z;y))",
    "A z (=(z,x) | exc(x;z))",
    "E z (exc(z;x) & =(y,z))",
    "A z E w (=(z,w) & ~w=x)",
    "(E z (=(z) & E(x,z)) | exc(y;x))",
];

/// Downward closure for dependence and exclusion formulas: every subteam
/// of a satisfying team satisfies.
fn downward_closure(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let ev = Evaluator::new(reg, suite_eval_config(cfg));
    let voc = vocab("P/1,E/2");
    let vars = [Var::from("x"), Var::from("y")];
    for text in DC_TEMPLATES {
        let phi = parse_formula(text, &voc)?;
        let p = ev.prepare(&phi, &vars)?;
        for n in 1..=cfg.max_size.min(2) {
            let rows = position_rows(n, 2);
            for model in models_for(&voc, &phi, n)? {
                let mut s = p.session(&model)?;
                let truth = (0..1u64 << rows.len())
                    .map(|mask| Ok(team_outcome(&mut s, &vars, &rows, mask, &model)?.is_true()))
                    .collect::<Result<Vec<bool>, OracleError>>()?;
                for (mask, &holds) in truth.iter().enumerate() {
                    if !holds {
                        continue;
                    }
                    // Dropping one row at a time covers every subteam.
                    for j in 0..rows.len() {
                        if mask >> j & 1 == 1 {
                            let sub = mask & !(1 << j);
                            out.check(truth[sub], || {
                                format!(
                                    "{phi} holds on {} but not on {}",
                                    team_at(&model, &vars, &rows, mask as u64),
                                    team_at(&model, &vars, &rows, sub as u64)
                                )
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// The memo never changes an outcome.
fn memo(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let voc = vocab("P/1,E/2");
    let on = Evaluator::new(reg.clone(), EvalConfig { memo: true, ..suite_eval_config(cfg) });
    let off = Evaluator::new(reg.clone(), EvalConfig { memo: false, ..suite_eval_config(cfg) });
    let mut formulas = Vec::new();
    for text in TEAM_TEMPLATES {
        formulas.push(parse_formula(text, &voc)?);
    }
    for name in ["star_exists", "star_forall", "star_majority"] {
        for chi in load(name, &voc, &reg)? {
            formulas.push(star_translate(&chi, &reg)?.output);
        }
    }
    let vars = [Var::from("x"), Var::from("y")];
    for phi in &formulas {
        let (pa, pb) = (on.prepare(phi, &vars)?, off.prepare(phi, &vars)?);
        for n in 1..=cfg.max_size.min(2) {
            let rows = position_rows(n, 2);
            for model in models_for(&voc, phi, n)? {
                let (mut sa, mut sb) = (pa.session(&model)?, pb.session(&model)?);
                for mask in 0..1u64 << rows.len() {
                    let a = team_outcome(&mut sa, &vars, &rows, mask, &model)?;
                    let b = team_outcome(&mut sb, &vars, &rows, mask, &model)?;
                    out.check(a == b, || {
                        format!(
                            "{phi}: memo {a}, no memo {b} on {}",
                            team_at(&model, &vars, &rows, mask)
                        )
                    });
                }
            }
        }
    }
    Ok(())
}

fn encoding(out: &mut SuiteReport) -> Result<(), OracleError> {
    let m = word_to_model("abbaa", &['a', 'b'])?;
    let members = |sym: &str| -> Vec<u32> {
        m.relation(sym)
            .map(|r| {
                r.iter()
                    .filter_map(|t| match t[0] {
                        Element::Base(i) => Some(i),
                        Element::Fresh(_) => None,
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    out.check(members("P_a") == [1, 4, 5], || format!("P_a = {:?}", members("P_a")));
    out.check(members("P_b") == [2, 3], || format!("P_b = {:?}", members("P_b")));

    let e = |i| Element::Base(i);
    let unary = Model::new(vocab("R/1"), 2)?.with("R", &[&[1]])?;
    let bits = encode_model(&unary, &[e(0), e(1)], &["R"])?.to_string();
    out.check(bits == "00101", || format!("R/1 = {{1}} encodes as {bits}"));
    let binary = Model::new(vocab("E/2"), 2)?.with("E", &[&[0, 1]])?;
    let bits = encode_model(&binary, &[e(0), e(1)], &["E"])?.to_string();
    out.check(bits == "0010100", || format!("E/2 = {{(0,1)}} encodes as {bits}"));
    let bits = encode_model(&unary, &[e(1), e(0)], &["R"])?.to_string();
    out.check(bits == "00110", || format!("R/1 = {{1}} under 1 < 0 encodes as {bits}"));

    for len in 0..=4u32 {
        for code in 0..1u32 << len {
            let w: String = (0..len).map(|i| if code >> i & 1 == 1 { 'b' } else { 'a' }).collect();
            let back = model_to_word(&word_to_model(&w, &['a', 'b'])?, &['a', 'b']);
            out.check(back.as_deref() == Some(w.as_str()), || format!("{w:?} reads back as {back:?}"));
        }
    }
    Ok(())
}

/// A perfect matching on `m` points, by pairing off the first point.
fn has_perfect_matching(m: usize) -> bool {
    fn go(free: u32) -> bool {
        if free == 0 {
            return true;
        }
        let a = free.trailing_zeros();
        let rest = free & !(1 << a);
        (0..32).any(|b| rest >> b & 1 == 1 && go(rest & !(1 << b)))
    }
    go(((1u64 << m) - 1) as u32)
}

fn lre_parity(cfg: &SuiteConfig, out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let s = LreSentence::parse(PERFECT_MATCHING, &Vocabulary::new(), &reg)?;
    let lre_cfg = LreConfig {
        budget: 2,
        ..LreConfig::default()
    };
    for n in 1..=cfg.max_size {
        let expected = (1..=2).find(|k| has_perfect_matching(n + k));
        let got = match eval_lre(&Model::new(Vocabulary::new(), n)?, &s, &lre_cfg, &reg)? {
            LreResult::Sat { bloat_size, .. } => Some(bloat_size),
            LreResult::UnsatWithinBudget => None,
        };
        out.check(got == expected, || {
            format!("perfect matching on {n} elements: least bloat {got:?}, expected {expected:?}")
        });
    }
    Ok(())
}

const LRE_BUDGET_SENTENCES: &[&str] = &[
    "lre { I2 Y ; E x Y(x) }",
    "lre { I2 Y ; A x ~Y(x) }",
    "lre { I2 Y ; E x E z ((Y(x) & Y(z)) & ~x=z) }",
    "lre { I2 Y ; E2 X:1 ; E x (X(x) & (Y(x) & A z (~X(z) | z=x))) }",
    "lre { I2 Y ; E2 X:1 ; A x ((Y(x) | P(x)) | X(x)) }",
    "lre { I2 Y ; E x E z E w ((Y(x) & (Y(z) & Y(w))) & (~x=z & (~x=w & ~z=w))) }",
];

/// A witness found within a budget is found again with any larger budget;
/// failure within a budget persists for every smaller one.
fn lre_budget(out: &mut SuiteReport) -> Result<(), OracleError> {
    let reg = Registry::builtin();
    let voc = vocab("P/1");
    for text in LRE_BUDGET_SENTENCES {
        let s = LreSentence::parse(text, &voc, &reg)?;
        for n in 1..=2 {
            for model in enumerate_models(&voc, n, MODEL_CAP)? {
                let results = (1..=3)
                    .map(|budget| eval_lre(&model, &s, &LreConfig { budget, ..LreConfig::default() }, &reg))
                    .collect::<Result<Vec<_>, _>>()?;
                for b in 0..results.len() {
                    for c in b..results.len() {
                        let ok = match (&results[b], &results[c]) {
                            (LreResult::Sat { .. }, later) => *later == results[b],
                            (LreResult::UnsatWithinBudget, _) => true,
                        } && !(results[c] == LreResult::UnsatWithinBudget && results[b].is_sat());
                        out.check(ok, || format!("{text} on {model}: budget {} vs {}", b + 1, c + 1));
                    }
                }
            }
        }
    }
    Ok(())
}
