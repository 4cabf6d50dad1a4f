//! Tarskian evaluation of first-order logic with generalized quantifiers, and
//! lax team semantics for the full logic including team atoms and `I`.
//!
//! Team evaluation runs a backtracking search over the witnesses of the
//! existential clauses (covers for `∨`, choice functions for `∃` and `Q`,
//! bloat sizes for `I`). Subformulas without `I` can instead be decided by a
//! SAT encoding of the same clauses; see [`Heuristics::sat`].

use std::collections::BTreeSet;

use thiserror::Error;

use crate::quantifiers::Registry;
use crate::structures::{Element, Model};
use crate::syntax::{Formula, Var};
use crate::teams::{Assignment, Team};

mod atoms;
mod compile;
mod sat;
mod search;

use compile::{CModel, Compiled, Row, UNSET};
use search::{Engine, RowTeam};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("free variable `{0}` is not assigned")]
    UnboundVariable(Var),
    #[error("first-order evaluation of a formula with team atoms or I")]
    NotFirstOrder,
    #[error("unknown quantifier `{0}`")]
    UnknownQuantifier(String),
    #[error("quantifier `{0}` is not of type (1)")]
    NotUnary(String),
    #[error("generalized atom does not match the type of `{0}`")]
    QuantifierType(String),
    #[error("relation `{0}` is not in the model's vocabulary")]
    UndeclaredSymbol(String),
    #[error("relation `{symbol}` has arity {expected} in the model, used with {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("{0} variables exceed the evaluator's limit")]
    TooManyVariables(usize),
    #[error("element {0} is not in the model's domain")]
    ElementOutsideDomain(Element),
    #[error("search cap exceeded: {0}")]
    CapExceeded(String),
}

/// Switches for the pruning and shortcut rules of team evaluation. All of
/// them preserve the semantics; turning them off gives the plain search of
/// the semantic clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Heuristics {
    /// Evaluate subformulas without team atoms and `I` row by row.
    pub flat_fast_path: bool,
    /// Restrict witness values to those satisfying the formula with team
    /// atoms and `I` replaced by true.
    pub flattening: bool,
    /// Exploit downward closure: singleton choices, pruning on partial teams.
    pub dc_pruning: bool,
    /// Split teams into independent groups when the formula allows it.
    pub locality: bool,
    /// Give a flat disjunct every row that satisfies it.
    pub flat_disjunct: bool,
    /// Decide `I`-free subformulas with the SAT encoding.
    pub sat: bool,
}

impl Heuristics {
    pub fn all() -> Heuristics {
        Heuristics {
            flat_fast_path: true,
            flattening: true,
            dc_pruning: true,
            locality: true,
            flat_disjunct: true,
            sat: true,
        }
    }

    pub fn none() -> Heuristics {
        Heuristics {
            flat_fast_path: false,
            flattening: false,
            dc_pruning: false,
            locality: false,
            flat_disjunct: false,
            sat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    /// Largest number of fresh elements tried for each `I`.
    pub bloat_budget: usize,
    pub memo: bool,
    pub max_team_size: usize,
    pub max_domain_size: usize,
    /// Search nodes visited before giving up.
    pub max_steps: u64,
    pub heuristics: Heuristics,
    /// Record the witnesses found.
    pub trace: bool,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            bloat_budget: 2,
            memo: true,
            max_team_size: 1 << 16,
            max_domain_size: 12,
            max_steps: 50_000_000,
            heuristics: Heuristics::all(),
            trace: false,
        }
    }
}

impl EvalConfig {
    /// Plain clause-by-clause search: no heuristics, no memo.
    pub fn naive() -> EvalConfig {
        EvalConfig {
            memo: false,
            heuristics: Heuristics::none(),
            ..EvalConfig::default()
        }
    }

    pub fn with_budget(mut self, budget: usize) -> EvalConfig {
        self.bloat_budget = budget;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    True,
    False,
    /// False within the bloat budget, but some `I` ran out of budget.
    Unknown,
}

impl Outcome {
    pub fn is_true(self) -> bool {
        self == Outcome::True
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::True => "true",
            Outcome::False => "false",
            Outcome::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub outcome: Outcome,
    /// Bloat size used by the outermost `I` on the witness path.
    pub least_bloat: Option<usize>,
    pub trace: Vec<String>,
    pub steps: u64,
}

/// No team atoms and no `I`.
pub fn is_flat(formula: &Formula) -> bool {
    formula.is_fo_q()
}

/// Tarskian truth of an FO(Q) formula, with the built-in quantifiers.
pub fn eval_tarski(model: &Model, s: &Assignment, formula: &Formula) -> Result<bool, EvalError> {
    Evaluator::new(Registry::builtin(), EvalConfig::default()).tarski(model, s, formula)
}

/// Lax team semantics, with the built-in quantifiers.
pub fn eval_team(
    model: &Model,
    team: &Team,
    formula: &Formula,
    cfg: &EvalConfig,
) -> Result<Outcome, EvalError> {
    Evaluator::new(Registry::builtin(), cfg.clone())
        .team(model, team, formula)
        .map(|r| r.outcome)
}

#[derive(Debug, Clone)]
pub struct Evaluator {
    registry: Registry,
    cfg: EvalConfig,
}

impl Evaluator {
    pub fn new(registry: Registry, cfg: EvalConfig) -> Evaluator {
        Evaluator { registry, cfg }
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn tarski(&self, model: &Model, s: &Assignment, formula: &Formula) -> Result<bool, EvalError> {
        let vars: Vec<Var> = s.domain().cloned().collect();
        self.prepare(formula, &vars)?.tarski(model, s)
    }

    pub fn team(&self, model: &Model, team: &Team, formula: &Formula) -> Result<EvalReport, EvalError> {
        self.prepare(formula, team.vars())?.eval(model, team)
    }

    /// Compiles `formula` once for repeated evaluation on teams over `vars`.
    pub fn prepare(&self, formula: &Formula, vars: &[Var]) -> Result<Prepared, EvalError> {
        Ok(Prepared {
            compiled: Compiled::compile(formula, vars, &self.registry)?,
            free: formula.free_vars(),
            cfg: self.cfg.clone(),
        })
    }
}

/// A compiled formula bound to an evaluator configuration.
pub struct Prepared {
    compiled: Compiled,
    free: BTreeSet<Var>,
    cfg: EvalConfig,
}

impl Prepared {
    fn row(&self, cm: &CModel, s: &Assignment) -> Result<Row, EvalError> {
        let mut row = [UNSET; compile::MAX_VARS];
        for (v, e) in &s.0 {
            let pos = cm
                .elements
                .iter()
                .position(|d| d == e)
                .ok_or(EvalError::ElementOutsideDomain(*e))?;
            if let Some(slot) = self.compiled.try_slot(v) {
                row[slot as usize] = pos as u8;
            }
        }
        for v in &self.free {
            if s.get(v).is_none() {
                return Err(EvalError::UnboundVariable(v.clone()));
            }
        }
        Ok(row)
    }

    /// Tarskian truth; the formula must be free of team atoms and `I`.
    pub fn tarski(&self, model: &Model, s: &Assignment) -> Result<bool, EvalError> {
        let c = &self.compiled;
        if !c.nodes[c.root].flat {
            return Err(EvalError::NotFirstOrder);
        }
        let cm = CModel::new(model, c)?;
        let mut row = self.row(&cm, s)?;
        Ok(Engine::new(c, &self.cfg).tarski(c.root, &cm, &mut row, false))
    }

    pub fn eval(&self, model: &Model, team: &Team) -> Result<EvalReport, EvalError> {
        self.session(model)?.eval(team)
    }

    /// Evaluation on one model for many teams, sharing the memo.
    pub fn session(&self, model: &Model) -> Result<Session<'_>, EvalError> {
        if model.size() > self.cfg.max_domain_size {
            return Err(EvalError::CapExceeded(format!(
                "domain size {} exceeds {}",
                model.size(),
                self.cfg.max_domain_size
            )));
        }
        let cm = CModel::new(model, &self.compiled)?;
        Ok(Session {
            prepared: self,
            cm,
            engine: Engine::new(&self.compiled, &self.cfg),
        })
    }
}

/// Candidate rows of a team sweep, sorted in compiled form, each with its
/// bit in the selecting mask.
pub(crate) struct CandidateRows {
    rows: Vec<Row>,
    remap: Vec<[u64; 256]>,
    /// Some candidates coincide on the formula's variables.
    dedup: bool,
    buf: RowTeam,
}

impl CandidateRows {
    fn select(&mut self, mask: u64) {
        let mut sorted = 0u64;
        for (byte, table) in self.remap.iter().enumerate() {
            sorted |= table[(mask >> (8 * byte)) as usize & 0xff];
        }
        let buf = &mut self.buf;
        buf.rows.clear();
        while sorted != 0 {
            buf.rows.push(self.rows[sorted.trailing_zeros() as usize]);
            sorted &= sorted - 1;
        }
        if self.dedup {
            buf.rows.dedup();
        }
    }

    /// Both sides lay out the candidates identically.
    pub(crate) fn same_layout(&self, other: &CandidateRows) -> bool {
        self.rows == other.rows && self.remap == other.remap && self.buf.dom == other.buf.dom
    }
}

pub struct Session<'p> {
    prepared: &'p Prepared,
    cm: CModel,
    engine: Engine<'p>,
}

impl Session<'_> {
    pub fn eval(&mut self, team: &Team) -> Result<EvalReport, EvalError> {
        let p = self.prepared;
        if !team.is_empty() {
            if let Some(v) = p.free.iter().find(|v| !team.vars().contains(v)) {
                return Err(EvalError::UnboundVariable(v.clone()));
            }
        }
        let mut rows = Vec::with_capacity(team.len());
        for s in team.assignments() {
            let mut row = [UNSET; compile::MAX_VARS];
            for (v, e) in &s.0 {
                // Variables the formula never mentions do not matter.
                let Some(slot) = p.compiled.try_slot(v) else {
                    continue;
                };
                let pos = self
                    .cm
                    .elements
                    .iter()
                    .position(|d| d == e)
                    .ok_or(EvalError::ElementOutsideDomain(*e))?;
                row[slot as usize] = pos as u8;
            }
            rows.push(row);
        }
        self.run(team.vars(), rows)
    }

    /// Like [`Session::eval`], with each row given as positions in the
    /// model's domain, listed in the order of `vars`.
    pub fn eval_positions<'r>(
        &mut self,
        vars: &[Var],
        rows: impl IntoIterator<Item = &'r [u8]>,
    ) -> Result<EvalReport, EvalError> {
        let c = &self.prepared.compiled;
        let slots: Vec<Option<u8>> = vars.iter().map(|v| c.try_slot(v)).collect();
        let mut out = Vec::new();
        for r in rows {
            let mut row = [UNSET; compile::MAX_VARS];
            for (&s, &a) in slots.iter().zip(r) {
                if a as usize >= self.cm.n {
                    return Err(EvalError::ElementOutsideDomain(Element::Base(a as u32)));
                }
                if let Some(s) = s {
                    row[s as usize] = a;
                }
            }
            out.push(row);
        }
        if !out.is_empty() {
            if let Some(v) = self.prepared.free.iter().find(|v| !vars.contains(v)) {
                return Err(EvalError::UnboundVariable(v.clone()));
            }
        }
        self.run(vars, out)
    }

    /// Compiles candidate rows, given as domain positions in the order of
    /// `vars`, for [`Session::eval_mask`].
    pub(crate) fn candidate_rows(
        &self,
        vars: &[Var],
        rows: &[Vec<u8>],
    ) -> Result<CandidateRows, EvalError> {
        let c = &self.prepared.compiled;
        if !rows.is_empty() {
            if let Some(v) = self.prepared.free.iter().find(|v| !vars.contains(v)) {
                return Err(EvalError::UnboundVariable(v.clone()));
            }
        }
        let slots: Vec<Option<u8>> = vars.iter().map(|v| c.try_slot(v)).collect();
        if rows.len() > 64 {
            return Err(EvalError::CapExceeded(format!("{} candidate rows exceed 64", rows.len())));
        }
        let mut compiled = Vec::with_capacity(rows.len());
        for (j, r) in rows.iter().enumerate() {
            let mut row = [UNSET; compile::MAX_VARS];
            for (&s, &a) in slots.iter().zip(r) {
                if a as usize >= self.cm.n {
                    return Err(EvalError::ElementOutsideDomain(Element::Base(a as u32)));
                }
                if let Some(s) = s {
                    row[s as usize] = a;
                }
            }
            compiled.push((row, j as u32));
        }
        compiled.sort_unstable();
        let dedup = compiled.windows(2).any(|w| w[0].0 == w[1].0);
        // Byte-wise tables taking a mask over candidate indices to a mask
        // over sorted positions.
        let mut remap = vec![[0u64; 256]; rows.len().div_ceil(8)];
        for (pos, &(_, j)) in compiled.iter().enumerate() {
            let (byte, b) = (j as usize / 8, j % 8);
            for (v, slot) in remap[byte].iter_mut().enumerate() {
                if v >> b & 1 == 1 {
                    *slot |= 1 << pos;
                }
            }
        }
        let dom = slots.iter().flatten().fold(0, |m, &s| m | compile::bit(s));
        Ok(CandidateRows {
            rows: compiled.into_iter().map(|(r, _)| r).collect(),
            remap,
            dedup,
            buf: RowTeam::new(dom, Vec::new()),
        })
    }

    /// The outcome on the subteam whose rows are the candidates selected by
    /// the bits of `mask`.
    pub(crate) fn eval_mask(
        &mut self,
        cand: &mut CandidateRows,
        mask: u64,
    ) -> Result<Outcome, EvalError> {
        cand.select(mask);
        self.eval_selected(cand)
    }

    /// The outcome on the rows last selected in `cand`, which must come from
    /// a session of a formula compiled with the same slots.
    pub(crate) fn eval_selected(&mut self, cand: &CandidateRows) -> Result<Outcome, EvalError> {
        let holds = self.engine.sat(self.prepared.compiled.root, &self.cm, &cand.buf);
        let holds = holds.inspect_err(|_| self.engine.reset());
        Ok(self.engine.outcome(holds?))
    }

    fn run(&mut self, vars: &[Var], rows: Vec<Row>) -> Result<EvalReport, EvalError> {
        let c = &self.prepared.compiled;
        let dom = vars
            .iter()
            .filter_map(|v| c.try_slot(v))
            .fold(0, |m, s| m | compile::bit(s));
        let t = RowTeam::new(dom, rows);
        let holds = self.engine.sat(c.root, &self.cm, &t);
        let holds = match holds {
            Ok(h) => h,
            Err(e) => {
                self.engine.report(false);
                return Err(e);
            }
        };
        Ok(self.engine.report(holds))
    }
}

#[cfg(test)]
mod tests;
