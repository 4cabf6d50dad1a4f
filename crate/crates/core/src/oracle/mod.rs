//! Exhaustive small-instance generators and differential equivalence checks.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::evaluator::{EvalConfig, EvalError, Evaluator, Outcome};
use crate::lre::LreError;
use crate::quantifiers::{QuantifierError, Registry};
use crate::structures::{all_tuples, Element, Model, StructureError};
use crate::syntax::{scope_info, Formula, Position, SyntaxError, Var};
use crate::teams::{Assignment, Team, TeamError};
use crate::transforms::{TransformError, TyParams};

mod suites;

pub use suites::{corpus, run_suite, SuiteConfig, SuiteReport, EQUIVALENCE_SUITES, INVARIANT_SUITES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{rows} possible rows exceed the cap of {cap}")]
    CapExceeded { rows: u128, cap: usize },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("instance lacks the set parameter `S`")]
    MissingSet,
    #[error("corpus `{corpus}`, line `{line}`: {error}")]
    Corpus {
        corpus: String,
        line: String,
        error: String,
    },
    #[error("{error}\non instance:\n{instance}")]
    OnInstance {
        instance: String,
        error: Box<OracleError>,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Team(#[from] TeamError),
    #[error(transparent)]
    Quantifier(#[from] QuantifierError),
    #[error(transparent)]
    Lre(#[from] LreError),
}

/// Default bound on `|domain|^|vars|` for [`enumerate_teams`].
pub const TEAM_ROW_CAP: usize = 27;

/// Every team over `vars` with values in `domain`. Team number `i` contains
/// the `j`-th assignment (lexicographic order of value positions) iff bit
/// `j` of `i` is set, so the empty team comes first.
pub fn enumerate_teams(
    vars: &[Var],
    domain: &[Element],
    max_rows: Option<usize>,
) -> Result<impl Iterator<Item = Team>, OracleError> {
    let cap = max_rows.unwrap_or(TEAM_ROW_CAP).min(63);
    let rows = (domain.len() as u128)
        .checked_pow(vars.len() as u32)
        .unwrap_or(u128::MAX);
    if rows > cap as u128 {
        return Err(OracleError::CapExceeded { rows, cap });
    }
    let tuples = all_tuples(domain, vars.len());
    let vars = vars.to_vec();
    Ok((0u64..1 << tuples.len()).map(move |mask| {
        let chosen = (0..tuples.len())
            .filter(|j| mask >> j & 1 == 1)
            .map(|j| tuples[j].clone());
        Team::from_rows(&vars, chosen).expect("rows match vars")
    }))
}

/// One point of a sweep. `set` is the `S` of the fresh-set suites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub model: Model,
    pub team: Team,
    pub set: Option<BTreeSet<Element>>,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.model)?;
        write!(f, "{}", self.team)?;
        if let Some(s) = &self.set {
            let names: Vec<String> = s.iter().map(Element::to_string).collect();
            write!(f, "\nS = {{{}}}", names.join(","))?;
        }
        Ok(())
    }
}

/// Something evaluable on an [`Instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Side {
    /// Team semantics on the instance.
    Team(Formula),
    /// Every assignment of the team satisfies the formula, read Tarskian.
    Pointwise(Formula),
    /// The sentence on `{∅}` over the model expanded by `symbol ↦ S`.
    Expanded { formula: Formula, symbol: String },
    /// For some `k` within the bloat budget, the sentence on `{∅}` over the
    /// model bloated by `k` with `symbol` naming the fresh elements.
    Bloated { formula: Formula, symbol: String },
    /// The team is empty.
    EmptyTeam,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Team(phi) => write!(f, "team {phi}"),
            Side::Pointwise(phi) => write!(f, "pointwise {phi}"),
            Side::Expanded { formula, symbol } => write!(f, "expanded[{symbol}:=S] {formula}"),
            Side::Bloated { formula, symbol } => write!(f, "bloated[{symbol}:=fresh] {formula}"),
            Side::EmptyTeam => f.write_str("empty team"),
        }
    }
}

impl Side {
    pub fn evaluate(&self, inst: &Instance, ev: &Evaluator) -> Result<Outcome, OracleError> {
        let bool_outcome = |b: bool| if b { Outcome::True } else { Outcome::False };
        Ok(match self {
            Side::Team(phi) => ev.team(&inst.model, &inst.team, phi)?.outcome,
            Side::Pointwise(phi) => {
                let mut all = true;
                for s in inst.team.assignments() {
                    all &= ev.tarski(&inst.model, &s, phi)?;
                }
                bool_outcome(all)
            }
            Side::Expanded { formula, symbol } => {
                let set = inst.set.as_ref().ok_or(OracleError::MissingSet)?;
                let m = inst.model.expand_unary(symbol, set)?;
                ev.team(&m, &Team::unit(), formula)?.outcome
            }
            Side::Bloated { formula, symbol } => {
                for k in 1..=ev.config().bloat_budget {
                    let b = inst.model.bloat(k)?;
                    let fresh: BTreeSet<Element> = b.fresh_elements().into_iter().collect();
                    let m = b.expand_unary(symbol, &fresh)?;
                    if ev.team(&m, &Team::unit(), formula)?.outcome.is_true() {
                        return Ok(Outcome::True);
                    }
                }
                Outcome::False
            }
            Side::EmptyTeam => bool_outcome(inst.team.is_empty()),
        })
    }
}

/// Two outcomes agree when both or neither are true; an exhausted `I`
/// budget counts as "no witness within the budget".
pub fn agree(a: Outcome, b: Outcome) -> bool {
    a.is_true() == b.is_true()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub instance: Instance,
    pub lhs: Side,
    pub rhs: Side,
    pub lhs_value: Outcome,
    pub rhs_value: Outcome,
    pub cfg: EvalConfig,
}

impl Counterexample {
    /// Re-evaluates both sides; true iff the same disagreement comes back.
    pub fn replay(&self, registry: &Registry) -> Result<bool, OracleError> {
        let ev = Evaluator::new(registry.clone(), self.cfg.clone());
        let l = self.lhs.evaluate(&self.instance, &ev)?;
        let r = self.rhs.evaluate(&self.instance, &ev)?;
        Ok(l == self.lhs_value && r == self.rhs_value && !agree(l, r))
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lhs: {} = {}", self.lhs, self.lhs_value)?;
        writeln!(f, "rhs: {} = {}", self.rhs, self.rhs_value)?;
        write!(f, "{}", self.instance)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EquivReport {
    pub checked: u64,
    pub counterexample: Option<Counterexample>,
}

impl fmt::Display for EquivReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "checked {} instances, {} counterexamples",
            self.checked,
            self.counterexample.is_some() as usize
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n{c}")?;
        }
        Ok(())
    }
}

/// Evaluates both sides on each instance in order and stops at the first
/// disagreement.
pub fn check_equivalence(
    lhs: &Side,
    rhs: &Side,
    instances: impl IntoIterator<Item = Instance>,
    ev: &Evaluator,
) -> Result<EquivReport, OracleError> {
    let mut report = EquivReport::default();
    for inst in instances {
        let attach = |e: OracleError, inst: &Instance| OracleError::OnInstance {
            instance: inst.to_string(),
            error: Box::new(e),
        };
        let l = lhs.evaluate(&inst, ev).map_err(|e| attach(e, &inst))?;
        let r = rhs.evaluate(&inst, ev).map_err(|e| attach(e, &inst))?;
        report.checked += 1;
        if !agree(l, r) {
            report.counterexample = Some(Counterexample {
                instance: inst,
                lhs: lhs.clone(),
                rhs: rhs.clone(),
                lhs_value: l,
                rhs_value: r,
                cfg: ev.config().clone(),
            });
            break;
        }
    }
    Ok(report)
}

/// Every model of size `1..=max_size` over `vocab` paired with every team
/// over `vars`, models outermost.
pub fn instances(
    vocab: &crate::syntax::Vocabulary,
    vars: &[Var],
    max_size: usize,
) -> Result<Vec<Instance>, OracleError> {
    let mut out = Vec::new();
    for n in 1..=max_size {
        for model in crate::structures::enumerate_models(vocab, n, crate::structures::MODEL_CAP)? {
            for team in enumerate_teams(vars, model.domain(), None)? {
                out.push(Instance {
                    model: model.clone(),
                    team,
                    set: None,
                });
            }
        }
    }
    Ok(out)
}

/// Whether `(u, v)` is a suitable pair for the subformula of `chi` at
/// `position`, with `s` the set encoded by `y`.
pub fn is_suitable_pair(
    u: &Team,
    v: &Team,
    s: &BTreeSet<Element>,
    params: &TyParams,
    chi: &Formula,
    position: &Position,
) -> bool {
    let info = scope_info(chi);
    let Some(entry) = info.get(position) else {
        return false;
    };
    let dom_u: BTreeSet<Var> = u.vars().iter().cloned().collect();
    let sup: BTreeSet<Var> = entry.superordinate.iter().cloned().collect();
    let mut dom_v = dom_u.clone();
    dom_v.extend([params.y.clone(), params.u.clone(), params.u_prime.clone()]);
    if entry.under_disjunction {
        dom_v.insert(params.v.clone());
    }
    let actual_v: BTreeSet<Var> = v.vars().iter().cloned().collect();
    if dom_u != sup || actual_v != dom_v {
        return false;
    }
    if *u != v.restrict(&dom_u) {
        return false;
    }
    if !closed_under_y(v, &params.y, s) {
        return false;
    }
    let (mut us, mut ups) = (BTreeSet::new(), BTreeSet::new());
    for row in v.assignments() {
        us.insert(row.get(&params.u));
        ups.insert(row.get(&params.u_prime));
    }
    v.is_empty() || (us.len() == 1 && ups.len() == 1 && us != ups)
}

/// `V = X[S/y]` for some `X`, checked as: every `y`-value lies in `S` and
/// reassigning `y` within `S` stays in `V`.
pub fn closed_under_y(v: &Team, y: &Var, s: &BTreeSet<Element>) -> bool {
    v.assignments().all(|row| {
        row.get(y).is_some_and(|a| s.contains(&a))
            && s.iter().all(|&b| v.contains(&row.update(y, b)))
    })
}

/// `V = X[S/y]` by search over all `X` drawn from `V` with `y` erased.
pub fn is_y_extension_brute_force(v: &Team, y: &Var, s: &BTreeSet<Element>) -> bool {
    if !v.vars().contains(y) {
        return false;
    }
    let rest: BTreeSet<Var> = v.vars().iter().filter(|w| *w != y).cloned().collect();
    let candidates: Vec<Assignment> = v.restrict(&rest).assignments().collect();
    assert!(candidates.len() < 20, "team too large for the brute-force check");
    let candidates = &candidates;
    (0u32..1 << candidates.len()).any(|mask| {
        let rows = (0..candidates.len())
            .filter(|i| mask >> i & 1 == 1)
            .flat_map(|i| s.iter().map(move |&b| candidates[i].update(y, b)));
        Team::from_assignments(v.vars().iter().cloned(), rows).is_ok_and(|x| x == *v)
    })
}

#[cfg(test)]
mod tests;
