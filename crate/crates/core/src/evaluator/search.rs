//! Backtracking search over the witnesses of the team-semantic clauses.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use super::atoms::Scratch;
use super::compile::{bit, project, CModel, Compiled, Mask, Op, Row};
use super::{EvalConfig, EvalError, EvalReport, Outcome};

/// A team in compiled form: sorted, duplicate-free rows over `dom`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct RowTeam {
    pub dom: Mask,
    pub rows: Vec<Row>,
}

impl RowTeam {
    pub fn new(dom: Mask, mut rows: Vec<Row>) -> RowTeam {
        rows.sort_unstable();
        rows.dedup();
        RowTeam { dom, rows }
    }

    fn with_rows(&self, rows: Vec<Row>) -> RowTeam {
        RowTeam::new(self.dom, rows)
    }

    /// `U[A/x]`
    fn extend_all(&self, x: u8, n: usize) -> RowTeam {
        let mut rows = Vec::with_capacity(self.rows.len() * n);
        for r in &self.rows {
            for a in 0..n {
                let mut r = *r;
                r[x as usize] = a as u8;
                rows.push(r);
            }
        }
        RowTeam::new(self.dom | bit(x), rows)
    }

    /// Partition by the values of the slots in `key`.
    fn groups(&self, key: Mask) -> Vec<RowTeam> {
        let slots: Vec<u8> = (0..16).filter(|&s| key & bit(s) != 0).collect();
        let mut groups: BTreeMap<Vec<u8>, Vec<Row>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry(project(r, &slots)).or_default().push(*r);
        }
        groups.into_values().map(|rows| self.with_rows(rows)).collect()
    }
}

type MemoKey = (u32, u32, RowTeam);

pub(crate) struct Engine<'c> {
    pub c: &'c Compiled,
    pub cfg: &'c EvalConfig,
    memo: HashMap<MemoKey, (bool, bool)>,
    /// Set when some `I` failed within its budget.
    exhausted: bool,
    pub steps: u64,
    trace: Vec<String>,
    bloat: BTreeMap<usize, usize>,
    tarski_ok: HashMap<(usize, usize), bool>,
    dc: HashMap<(usize, usize), bool>,
    scratch: RefCell<Scratch>,
}

impl<'c> Engine<'c> {
    pub fn new(c: &'c Compiled, cfg: &'c EvalConfig) -> Engine<'c> {
        Engine {
            c,
            cfg,
            memo: HashMap::new(),
            exhausted: false,
            steps: 0,
            trace: Vec::new(),
            bloat: BTreeMap::new(),
            tarski_ok: HashMap::new(),
            dc: HashMap::new(),
            scratch: RefCell::new(Scratch::default()),
        }
    }

    /// Result of the last top-level call; resets the per-call state but
    /// keeps the memo.
    pub fn report(&mut self, holds: bool) -> EvalReport {
        let outcome = match (holds, self.exhausted) {
            (true, _) => Outcome::True,
            (false, true) => Outcome::Unknown,
            (false, false) => Outcome::False,
        };
        let least_bloat = if holds {
            self.bloat.iter().next_back().map(|(_, k)| *k)
        } else {
            None
        };
        let report = EvalReport {
            outcome,
            least_bloat,
            trace: std::mem::take(&mut self.trace),
            steps: self.steps,
        };
        self.reset();
        report
    }

    /// Like `report`, without collecting the trace and bloat.
    pub fn outcome(&mut self, holds: bool) -> Outcome {
        let outcome = match (holds, self.exhausted) {
            (true, _) => Outcome::True,
            (false, true) => Outcome::Unknown,
            (false, false) => Outcome::False,
        };
        self.reset();
        outcome
    }

    pub fn reset(&mut self) {
        self.exhausted = false;
        self.steps = 0;
        if !self.bloat.is_empty() {
            self.bloat.clear();
        }
        self.trace.clear();
    }

    fn use_memo(&self) -> bool {
        self.cfg.memo && !self.cfg.trace
    }

    // ---- properties that depend on the domain size ----

    /// Every `Q` below `id` is monotone on this model, so that the team
    /// semantics of its atom-free part is pointwise.
    pub fn tarski_ok(&mut self, id: usize, m: &CModel) -> bool {
        if self.c.nodes[id].quant_qs.is_empty() {
            return true;
        }
        if let Some(&v) = self.tarski_ok.get(&(id, m.level)) {
            return v;
        }
        let v = self.c.nodes[id]
            .quant_qs
            .iter()
            .all(|&q| m.class(q, self.c).monotone);
        self.tarski_ok.insert((id, m.level), v);
        v
    }

    /// Downward closure of the node on this model.
    pub fn dc(&mut self, id: usize, m: &CModel) -> bool {
        if let Some(&v) = self.dc.get(&(id, m.level)) {
            return v;
        }
        let node = &self.c.nodes[id];
        let v = node.static_dc
            && node
                .induced_qs
                .iter()
                .all(|&q| m.class(q, self.c).dc_nonempty);
        self.dc.insert((id, m.level), v);
        v
    }

    // ---- pointwise evaluation ----

    /// Tarskian truth at `row`. With `weak`, team atoms and `I` count as
    /// true, which yields a flat formula implied by the node.
    pub fn tarski(&self, id: usize, m: &CModel, row: &mut Row, weak: bool) -> bool {
        match &self.c.nodes[id].op {
            Op::Rel { positive, rel, args } => m.holds_at(*rel, row, args) == *positive,
            Op::Eq { positive, a, b } => (row[*a as usize] == row[*b as usize]) == *positive,
            Op::And(a, b) => self.tarski(*a, m, row, weak) && self.tarski(*b, m, row, weak),
            Op::Or(a, b) => self.tarski(*a, m, row, weak) || self.tarski(*b, m, row, weak),
            Op::Exists(x, body) | Op::Forall(x, body) => {
                let (x, want) = (*x as usize, matches!(self.c.nodes[id].op, Op::Exists(..)));
                let old = row[x];
                let mut hit = false;
                for a in 0..m.n {
                    row[x] = a as u8;
                    if self.tarski(*body, m, row, weak) == want {
                        hit = true;
                        break;
                    }
                }
                row[x] = old;
                hit == want
            }
            Op::Quant(q, x, body) => {
                let x = *x as usize;
                let old = row[x];
                let mut mask = 0u64;
                for a in 0..m.n {
                    row[x] = a as u8;
                    if self.tarski(*body, m, row, weak) {
                        mask |= 1 << a;
                    }
                }
                row[x] = old;
                m.class(*q, self.c).contains(mask)
            }
            _ => {
                assert!(weak, "team atom or I in pointwise evaluation");
                true
            }
        }
    }

    /// Values `a` with `body` weakly true at `row[a/x]`, as a bitmask.
    pub(crate) fn candidates(&mut self, x: u8, body: usize, m: &CModel, row: &Row) -> u64 {
        let full = (1u64 << m.n) - 1;
        if !(self.cfg.heuristics.flattening && self.tarski_ok(body, m)) {
            return full;
        }
        let mut r = *row;
        let mut mask = 0;
        for a in 0..m.n {
            r[x as usize] = a as u8;
            if self.tarski(body, m, &mut r, true) {
                mask |= 1 << a;
            }
        }
        mask
    }

    // ---- team evaluation ----

    fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.cfg.max_steps {
            return Err(EvalError::CapExceeded(format!(
                "more than {} search steps",
                self.cfg.max_steps
            )));
        }
        Ok(())
    }

    pub fn sat(&mut self, id: usize, m: &CModel, t: &RowTeam) -> Result<bool, EvalError> {
        let node = &self.c.nodes[id];
        if t.rows.is_empty() && !node.has_general && !node.has_i {
            return Ok(true);
        }
        if t.rows.len() > self.cfg.max_team_size {
            return Err(EvalError::CapExceeded(format!(
                "team of {} rows exceeds {}",
                t.rows.len(),
                self.cfg.max_team_size
            )));
        }
        self.tick()?;
        let key = if self.use_memo() {
            let key = (id as u32, m.level as u32, t.clone());
            if let Some(&(v, ex)) = self.memo.get(&key) {
                self.exhausted |= ex;
                return Ok(v);
            }
            Some(key)
        } else {
            None
        };
        let saved = std::mem::replace(&mut self.exhausted, false);
        let v = self.sat_inner(id, m, t)?;
        let ex = self.exhausted;
        self.exhausted = saved || ex;
        if let Some(key) = key {
            self.memo.insert(key, (v, ex));
        }
        Ok(v)
    }

    fn all_rows(&self, id: usize, m: &CModel, t: &RowTeam) -> bool {
        t.rows
            .iter()
            .all(|r| self.tarski(id, m, &mut r.clone(), false))
    }

    fn sat_inner(&mut self, id: usize, m: &CModel, t: &RowTeam) -> Result<bool, EvalError> {
        let node = &self.c.nodes[id];
        let h = self.cfg.heuristics;
        if matches!(node.op, Op::Rel { .. } | Op::Eq { .. }) {
            return Ok(self.all_rows(id, m, t));
        }
        if node.flat && h.flat_fast_path && self.tarski_ok(id, m) {
            return Ok(self.all_rows(id, m, t));
        }
        if h.locality && t.rows.len() > 1 {
            let key = node.locality & t.dom;
            if key != 0 {
                let groups = t.groups(key);
                if groups.len() > 1 {
                    for g in &groups {
                        if !self.sat(id, m, g)? {
                            return Ok(false);
                        }
                    }
                    return Ok(true);
                }
            }
        }
        if h.sat && !self.cfg.trace && super::sat::worthwhile(self.c, id) {
            if let Some(v) = super::sat::decide(self, id, m, t)? {
                return Ok(v);
            }
        }
        let c = self.c;
        match c.nodes[id].op {
            Op::Rel { .. } | Op::Eq { .. } => unreachable!(),
            Op::And(a, b) => {
                // Cheap, downward-closed conjuncts first.
                let (a, b) = if c.nodes[b].guards.contains(&b) { (b, a) } else { (a, b) };
                Ok(self.sat(a, m, t)? && self.sat(b, m, t)?)
            }
            Op::Or(a, b) => self.or_search(id, a, b, m, t),
            Op::Forall(x, body) => {
                let ext = t.extend_all(x, m.n);
                self.sat(body, m, &ext)
            }
            Op::Exists(x, body) => {
                let options = self.exists_options(x, body, m, t)?;
                self.choice_search(id, x, body, m, t, options)
            }
            Op::Quant(q, x, body) => {
                let options = self.quant_options(q, x, body, m, t)?;
                self.choice_search(id, x, body, m, t, options)
            }
            Op::I(x, body) => self.i_search(id, x, body, m, t),
            _ => Ok(self.atom(id, m, t)),
        }
    }

    fn render_rows(&self, m: &CModel, rows: &[Row], dom: Mask) -> String {
        let parts: Vec<String> = rows
            .iter()
            .map(|r| {
                let vals: Vec<String> = (0..16u8)
                    .filter(|&s| dom & bit(s) != 0)
                    .map(|s| format!("{}={}", self.c.vars[s as usize], m.elements[r[s as usize] as usize]))
                    .collect();
                format!("({})", vals.join(","))
            })
            .collect();
        format!("{{{}}}", parts.join(" "))
    }

    fn or_search(&mut self, id: usize, a: usize, b: usize, m: &CModel, t: &RowTeam) -> Result<bool, EvalError> {
        let h = self.cfg.heuristics;
        let weak_a = h.flattening && self.tarski_ok(a, m);
        let weak_b = h.flattening && self.tarski_ok(b, m);
        let dc_a = h.dc_pruning && self.dc(a, m);
        let dc_b = h.dc_pruning && self.dc(b, m);
        let (mut only_a, mut only_b, mut free) = (Vec::new(), Vec::new(), Vec::new());
        for r in &t.rows {
            let mut can_a = !weak_a || self.tarski(a, m, &mut r.clone(), true);
            let mut can_b = !weak_b || self.tarski(b, m, &mut r.clone(), true);
            if can_a && dc_a {
                can_a = self.sat(a, m, &t.with_rows(vec![*r]))?;
            }
            if can_b && dc_b {
                can_b = self.sat(b, m, &t.with_rows(vec![*r]))?;
            }
            match (can_a, can_b) {
                (false, false) => return Ok(false),
                (true, false) => only_a.push(*r),
                (false, true) => only_b.push(*r),
                (true, true) => free.push(*r),
            }
        }

        // A flat side with pointwise semantics takes every row it can.
        if h.flat_disjunct {
            for (flat, other, only_other, dc_other) in [(a, b, &only_b, dc_b), (b, a, &only_a, dc_a)] {
                if self.c.nodes[flat].flat && self.tarski_ok(flat, m) && (if flat == a { weak_a } else { weak_b }) {
                    return self.flat_split(id, other, m, t, only_other, &free, dc_other, flat == a);
                }
            }
        }

        // Rows may go left, right, or (when neither side is downward
        // closed) both ways.
        let both = !(dc_a || dc_b);
        let mut left = only_a.clone();
        let mut right = only_b.clone();
        if dc_a && !left.is_empty() && !self.sat(a, m, &t.with_rows(left.clone()))? {
            return Ok(false);
        }
        if dc_b && !right.is_empty() && !self.sat(b, m, &t.with_rows(right.clone()))? {
            return Ok(false);
        }
        self.or_dfs(id, a, b, m, t, &free, 0, &mut left, &mut right, both, dc_a, dc_b)
    }

    #[allow(clippy::too_many_arguments)]
    fn flat_split(
        &mut self,
        id: usize,
        other: usize,
        m: &CModel,
        t: &RowTeam,
        only_other: &[Row],
        free: &[Row],
        dc_other: bool,
        flat_is_left: bool,
    ) -> Result<bool, EvalError> {
        // The flat side holds on all rows satisfying it; the other side
        // needs its forced rows plus some subset of the shared ones.
        let subsets: Box<dyn Iterator<Item = u64>> = if dc_other || free.is_empty() {
            Box::new(std::iter::once(0))
        } else {
            if free.len() > 40 {
                return Err(EvalError::CapExceeded("disjunction cover space".into()));
            }
            let k = free.len();
            Box::new((0..=k).flat_map(move |size| subsets_of_size(k, size)))
        };
        for s in subsets {
            self.tick()?;
            let mut rows = only_other.to_vec();
            rows.extend((0..free.len()).filter(|i| s >> i & 1 == 1).map(|i| free[i]));
            let mark = self.trace.len();
            if self.cfg.trace {
                let flat_rows: Vec<Row> = free.iter().copied().chain(t.rows.iter().copied().filter(|r| !only_other.contains(r) && !free.contains(r))).collect();
                let (l, r) = if flat_is_left { (flat_rows, rows.clone()) } else { (rows.clone(), flat_rows) };
                self.trace.push(format!(
                    "or {}: left {} right {}",
                    self.c.nodes[id].text,
                    self.render_rows(m, &l, t.dom),
                    self.render_rows(m, &r, t.dom)
                ));
            }
            if self.sat(other, m, &t.with_rows(rows))? {
                return Ok(true);
            }
            self.trace.truncate(mark);
        }
        Ok(false)
    }

    #[allow(clippy::too_many_arguments)]
    fn or_dfs(
        &mut self,
        id: usize,
        a: usize,
        b: usize,
        m: &CModel,
        t: &RowTeam,
        free: &[Row],
        i: usize,
        left: &mut Vec<Row>,
        right: &mut Vec<Row>,
        both: bool,
        dc_a: bool,
        dc_b: bool,
    ) -> Result<bool, EvalError> {
        self.tick()?;
        if i == free.len() {
            let mark = self.trace.len();
            if self.cfg.trace {
                self.trace.push(format!(
                    "or {}: left {} right {}",
                    self.c.nodes[id].text,
                    self.render_rows(m, &t.with_rows(left.clone()).rows, t.dom),
                    self.render_rows(m, &t.with_rows(right.clone()).rows, t.dom)
                ));
            }
            let ok = self.sat(a, m, &t.with_rows(left.clone()))?
                && self.sat(b, m, &t.with_rows(right.clone()))?;
            if !ok {
                self.trace.truncate(mark);
            }
            return Ok(ok);
        }
        let r = free[i];
        let choices: &[(bool, bool)] = if both {
            &[(true, false), (false, true), (true, true)]
        } else {
            &[(true, false), (false, true)]
        };
        for &(to_a, to_b) in choices {
            if to_a {
                left.push(r);
            }
            if to_b {
                right.push(r);
            }
            let viable = (!to_a || !dc_a || self.sat(a, m, &t.with_rows(left.clone()))?)
                && (!to_b || !dc_b || self.sat(b, m, &t.with_rows(right.clone()))?);
            if viable && self.or_dfs(id, a, b, m, t, free, i + 1, left, right, both, dc_a, dc_b)? {
                return Ok(true);
            }
            if to_a {
                left.pop();
            }
            if to_b {
                right.pop();
            }
        }
        Ok(false)
    }

    /// Per row, the value sets to try for `∃x`, smallest first.
    fn exists_options(&mut self, x: u8, body: usize, m: &CModel, t: &RowTeam) -> Result<Vec<Vec<u64>>, EvalError> {
        let dc = self.cfg.heuristics.dc_pruning && self.dc(body, m);
        let mut out = Vec::with_capacity(t.rows.len());
        for r in &t.rows {
            let cand = self.candidates(x, body, m, r);
            let opts: Vec<u64> = if dc {
                let mut singles = Vec::new();
                for a in 0..m.n {
                    if cand >> a & 1 == 1 && self.singleton_ok(x, body, m, t, r, a)? {
                        singles.push(1 << a);
                    }
                }
                singles
            } else {
                nonempty_submasks(cand)
            };
            if opts.is_empty() {
                return Ok(Vec::new());
            }
            out.push(opts);
        }
        Ok(out)
    }

    fn singleton_ok(&mut self, x: u8, body: usize, m: &CModel, t: &RowTeam, r: &Row, a: usize) -> Result<bool, EvalError> {
        let mut row = *r;
        row[x as usize] = a as u8;
        self.sat(body, m, &RowTeam::new(t.dom | bit(x), vec![row]))
    }

    /// Per row, the members of `Q^A` to try for `Qx`.
    fn quant_options(&mut self, q: usize, x: u8, body: usize, m: &CModel, t: &RowTeam) -> Result<Vec<Vec<u64>>, EvalError> {
        let class = m.class(q, self.c);
        let dc = self.cfg.heuristics.dc_pruning && self.dc(body, m);
        let mut out = Vec::with_capacity(t.rows.len());
        for r in &t.rows {
            let cand = self.candidates(x, body, m, r);
            let mut opts: Vec<u64> = class.list.iter().copied().filter(|&b| b & !cand == 0).collect();
            if dc {
                let all = opts.clone();
                opts.retain(|&b| !all.iter().any(|&c| c != b && c & !b == 0));
            }
            opts.sort_by_key(|b| (b.count_ones(), *b));
            if opts.is_empty() {
                return Ok(Vec::new());
            }
            out.push(opts);
        }
        Ok(out)
    }

    fn extension(t: &RowTeam, x: u8, chosen: &[(Row, u64)]) -> RowTeam {
        let mut rows = Vec::new();
        for (r, mask) in chosen {
            for a in 0..64 {
                if mask >> a & 1 == 1 {
                    let mut r = *r;
                    r[x as usize] = a as u8;
                    rows.push(r);
                }
            }
        }
        RowTeam::new(t.dom | bit(x), rows)
    }

    fn choice_search(
        &mut self,
        id: usize,
        x: u8,
        body: usize,
        m: &CModel,
        t: &RowTeam,
        options: Vec<Vec<u64>>,
    ) -> Result<bool, EvalError> {
        if options.len() != t.rows.len() {
            return Ok(false);
        }
        let dc = self.cfg.heuristics.dc_pruning && self.dc(body, m);
        let mut chosen = Vec::with_capacity(t.rows.len());
        self.choice_dfs(id, x, body, m, t, &options, dc, &mut chosen)
    }

    #[allow(clippy::too_many_arguments)]
    fn choice_dfs(
        &mut self,
        id: usize,
        x: u8,
        body: usize,
        m: &CModel,
        t: &RowTeam,
        options: &[Vec<u64>],
        dc: bool,
        chosen: &mut Vec<(Row, u64)>,
    ) -> Result<bool, EvalError> {
        self.tick()?;
        let i = chosen.len();
        if i == t.rows.len() {
            let ext = Self::extension(t, x, chosen);
            let mark = self.trace.len();
            if self.cfg.trace {
                let parts: Vec<String> = chosen
                    .iter()
                    .map(|(r, mask)| {
                        let vals: Vec<String> = (0..m.n)
                            .filter(|a| mask >> a & 1 == 1)
                            .map(|a| m.elements[a].to_string())
                            .collect();
                        format!("{} -> {{{}}}", self.render_rows(m, &[*r], t.dom & !bit(x)), vals.join(","))
                    })
                    .collect();
                self.trace.push(format!("choose {}: {}", self.c.nodes[id].text, parts.join("; ")));
            }
            if self.sat(body, m, &ext)? {
                return Ok(true);
            }
            self.trace.truncate(mark);
            return Ok(false);
        }
        let r = t.rows[i];
        for &opt in &options[i] {
            chosen.push((r, opt));
            let prune = if i + 1 < t.rows.len() {
                let partial = Self::extension(t, x, chosen);
                !self.partial_ok(body, m, &partial, dc)?
            } else {
                false
            };
            if !prune && self.choice_dfs(id, x, body, m, t, options, dc, chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    /// Necessary conditions on a subteam of the eventual team of `body`.
    fn partial_ok(&mut self, body: usize, m: &CModel, partial: &RowTeam, dc: bool) -> Result<bool, EvalError> {
        if !self.cfg.heuristics.dc_pruning {
            return Ok(true);
        }
        if dc {
            return self.sat(body, m, partial);
        }
        for g in self.c.nodes[body].guards.clone() {
            if self.dc(g, m) && !self.atom(g, m, partial) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn i_search(&mut self, id: usize, x: u8, body: usize, m: &CModel, t: &RowTeam) -> Result<bool, EvalError> {
        for k in 1..=self.cfg.bloat_budget {
            if m.n + k > self.cfg.max_domain_size {
                return Err(EvalError::CapExceeded(format!(
                    "bloated domain of {} elements exceeds {}",
                    m.n + k,
                    self.cfg.max_domain_size
                )));
            }
            self.tick()?;
            let bloated = m.bloat(k, self.c);
            let mut rows = Vec::with_capacity(t.rows.len() * k);
            for r in &t.rows {
                for a in m.n..m.n + k {
                    let mut r = *r;
                    r[x as usize] = a as u8;
                    rows.push(r);
                }
            }
            let ext = RowTeam::new(t.dom | bit(x), rows);
            let mark = self.trace.len();
            if self.cfg.trace {
                self.trace.push(format!("bloat {}: {k}", self.c.nodes[id].text));
            }
            if self.sat(body, &bloated, &ext)? {
                self.bloat.insert(id, k);
                return Ok(true);
            }
            self.trace.truncate(mark);
        }
        self.exhausted = true;
        Ok(false)
    }

    // ---- atoms ----

    pub fn atom(&self, id: usize, m: &CModel, t: &RowTeam) -> bool {
        let fast = super::atoms::fast(&mut self.scratch.borrow_mut(), self.c, id, m, &t.rows);
        fast.unwrap_or_else(|| super::atoms::slow(self.c, id, m, &t.rows))
    }
}

/// Nonempty submasks of `mask`, by increasing size then value.
fn nonempty_submasks(mask: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = mask;
    while s != 0 {
        out.push(s);
        s = (s - 1) & mask;
    }
    out.sort_by_key(|b| (b.count_ones(), *b));
    out
}

/// All `k`-bit masks with `size` bits set, in increasing order.
fn subsets_of_size(k: usize, size: usize) -> impl Iterator<Item = u64> {
    (0..1u64 << k).filter(move |s| s.count_ones() as usize == size)
}
