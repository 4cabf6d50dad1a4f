//! SAT encoding of team evaluation for subformulas without `I`.
//!
//! Every subformula gets one propositional variable per row that may belong
//! to its team; the clauses of the semantics relate the rows of a node to
//! the rows of its children, and team atoms constrain their own rows.

use std::collections::HashMap;

use batsat::{lbool, BasicSolver, Lit, SolverInterface};

use super::compile::{bit, project, CModel, Compiled, Mask, Op, Row};
use super::search::{Engine, RowTeam};
use super::EvalError;

/// Encodings larger than this are left to the search.
const MAX_LITERALS: usize = 20_000_000;

/// Nodes where the encoding pays off: not atoms, not flat, and free of
/// generalized atoms other than `D_k`.
pub(crate) fn worthwhile(c: &Compiled, id: usize) -> bool {
    let node = &c.nodes[id];
    !node.flat
        && !node.has_general
        && !node.has_i
        && matches!(
            node.op,
            Op::And(..) | Op::Or(..) | Op::Exists(..) | Op::Forall(..) | Op::Quant(..)
        )
}

/// Decides `id` on `t`, or `None` when the encoding would be too large.
pub(crate) fn decide(
    eng: &mut Engine<'_>,
    id: usize,
    m: &CModel,
    t: &RowTeam,
) -> Result<Option<bool>, EvalError> {
    let mut enc = Encoder {
        eng,
        solver: BasicSolver::default(),
        size: 0,
    };
    let mut rows = Vec::with_capacity(t.rows.len());
    for r in &t.rows {
        let l = enc.lit();
        enc.solver.add_clause_reuse(&mut vec![l]);
        rows.push((*r, l));
    }
    match enc.encode(id, m, t.dom, &rows) {
        Ok(()) => {}
        Err(Abort::TooLarge) => return Ok(None),
        Err(Abort::Eval(e)) => return Err(e),
    }
    enc.eng.steps += 1;
    Ok(match enc.solver.solve_limited(&[]) {
        r if r == lbool::TRUE => Some(true),
        r if r == lbool::FALSE => Some(false),
        _ => None,
    })
}

enum Abort {
    TooLarge,
    Eval(EvalError),
}

struct Encoder<'a, 'c> {
    eng: &'a mut Engine<'c>,
    solver: BasicSolver,
    size: usize,
}

/// Projection variables, created on demand.
#[derive(Default)]
struct Proj(HashMap<Vec<u8>, Lit>);

impl Proj {
    fn get(&mut self, enc: &mut Encoder<'_, '_>, key: Vec<u8>) -> Lit {
        *self.0.entry(key).or_insert_with(|| enc.lit())
    }
}

impl<'a, 'c> Encoder<'a, 'c> {
    fn lit(&mut self) -> Lit {
        Lit::new(self.solver.new_var_default(), true)
    }

    fn clause(&mut self, mut lits: Vec<Lit>) -> Result<(), Abort> {
        self.size += lits.len();
        if self.size > MAX_LITERALS {
            return Err(Abort::TooLarge);
        }
        self.solver.add_clause_reuse(&mut lits);
        Ok(())
    }

    fn implies(&mut self, a: Lit, b: Lit) -> Result<(), Abort> {
        self.clause(vec![!a, b])
    }

    fn encode(&mut self, id: usize, m: &CModel, dom: Mask, rows: &[(Row, Lit)]) -> Result<(), Abort> {
        let c = self.eng.c;
        let node = &c.nodes[id];
        let pointwise = self.eng.tarski_ok(id, m);
        if node.flat && pointwise {
            for (r, l) in rows {
                if !self.eng.tarski(id, m, &mut r.clone(), false) {
                    self.clause(vec![!*l])?;
                }
            }
            return Ok(());
        }
        if pointwise {
            for (r, l) in rows {
                if !self.eng.tarski(id, m, &mut r.clone(), true) {
                    self.clause(vec![!*l])?;
                }
            }
        }
        match node.op.clone() {
            Op::Rel { .. } | Op::Eq { .. } => {
                for (r, l) in rows {
                    if !self.eng.tarski(id, m, &mut r.clone(), false) {
                        self.clause(vec![!*l])?;
                    }
                }
            }
            Op::And(a, b) => {
                self.encode(a, m, dom, rows)?;
                self.encode(b, m, dom, rows)?;
            }
            Op::Or(a, b) => {
                let mut left = Vec::with_capacity(rows.len());
                let mut right = Vec::with_capacity(rows.len());
                for (r, l) in rows {
                    let (la, lb) = (self.lit(), self.lit());
                    self.implies(la, *l)?;
                    self.implies(lb, *l)?;
                    self.clause(vec![!*l, la, lb])?;
                    left.push((*r, la));
                    right.push((*r, lb));
                }
                self.encode(a, m, dom, &left)?;
                self.encode(b, m, dom, &right)?;
            }
            Op::Forall(x, body) => {
                let mut children: HashMap<Row, (Lit, Vec<Lit>)> = HashMap::new();
                for (p, lp) in rows {
                    for a in 0..m.n {
                        let mut r = *p;
                        r[x as usize] = a as u8;
                        let lc = match children.get_mut(&r) {
                            Some((lc, parents)) => {
                                parents.push(*lp);
                                *lc
                            }
                            None => {
                                let lc = self.lit();
                                children.insert(r, (lc, vec![*lp]));
                                lc
                            }
                        };
                        self.implies(*lp, lc)?;
                    }
                }
                let child_rows = self.close_children(children)?;
                self.encode(body, m, dom | bit(x), &child_rows)?;
            }
            Op::Exists(x, body) => {
                let mut children: HashMap<Row, (Lit, Vec<Lit>)> = HashMap::new();
                for (p, lp) in rows {
                    let cand = self.eng.candidates(x, body, m, p);
                    let mut some = vec![!*lp];
                    for a in (0..m.n).filter(|a| cand >> a & 1 == 1) {
                        let mut r = *p;
                        r[x as usize] = a as u8;
                        let lc = self.child(&mut children, r, *lp);
                        some.push(lc);
                    }
                    self.clause(some)?;
                }
                let child_rows = self.close_children(children)?;
                self.encode(body, m, dom | bit(x), &child_rows)?;
            }
            Op::Quant(q, x, body) => {
                let class = m.class(q, c);
                let rebinding = dom & bit(x) != 0;
                let mut children: HashMap<Row, (Lit, Vec<Lit>)> = HashMap::new();
                for (p, lp) in rows {
                    let cand = self.eng.candidates(x, body, m, p);
                    let values: Vec<usize> = (0..m.n).filter(|a| cand >> a & 1 == 1).collect();
                    // g[i]: value values[i] is chosen for row p.
                    let mut g = Vec::with_capacity(values.len());
                    for &a in &values {
                        let mut r = *p;
                        r[x as usize] = a as u8;
                        let ga = if rebinding {
                            let ga = self.lit();
                            let lc = self.child(&mut children, r, ga);
                            self.implies(ga, lc)?;
                            ga
                        } else {
                            self.child(&mut children, r, *lp)
                        };
                        self.implies(ga, *lp)?;
                        g.push(ga);
                    }
                    for s in 0u64..1 << values.len() {
                        let mask = values
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| s >> i & 1 == 1)
                            .fold(0u64, |acc, (_, &a)| acc | 1 << a);
                        if class.contains(mask) {
                            continue;
                        }
                        let mut cl = vec![!*lp];
                        for (i, &ga) in g.iter().enumerate() {
                            cl.push(if s >> i & 1 == 1 { !ga } else { ga });
                        }
                        self.clause(cl)?;
                    }
                }
                let child_rows = self.close_children(children)?;
                self.encode(body, m, dom | bit(x), &child_rows)?;
            }
            Op::I(..) => unreachable!("I is left to the search"),
            Op::Dep(ante, y) => self.functional(rows, &ante, y)?,
            Op::General { q, tuples } => {
                let k = c.quants[q]
                    .dependence_arity()
                    .expect("only D_k reaches the encoding");
                let t = &tuples[0];
                self.functional(rows, &t[..k - 1], t[k - 1])?;
            }
            Op::Inc(xs, ys) => {
                let mut groups: HashMap<Vec<u8>, Vec<Lit>> = HashMap::new();
                for (r, l) in rows {
                    groups.entry(project(r, &ys)).or_default().push(*l);
                }
                let mut present = Proj::default();
                for (r, l) in rows {
                    let key = project(r, &xs);
                    if !groups.contains_key(&key) {
                        self.clause(vec![!*l])?;
                        continue;
                    }
                    let y = present.get(self, key);
                    self.implies(*l, y)?;
                }
                for (key, y) in present.0.clone() {
                    let mut cl = vec![!y];
                    cl.extend(&groups[&key]);
                    self.clause(cl)?;
                }
            }
            Op::Exc(xs, ys) => {
                let (mut left, mut right) = (Proj::default(), Proj::default());
                for (r, l) in rows {
                    let a = left.get(self, project(r, &xs));
                    self.implies(*l, a)?;
                    let b = right.get(self, project(r, &ys));
                    self.implies(*l, b)?;
                }
                for (key, a) in &left.0 {
                    if let Some(b) = right.0.get(key) {
                        self.clause(vec![!*a, !*b])?;
                    }
                }
            }
            Op::Indep { xs, cond, ys } => {
                let (mut xz, mut zy) = (Proj::default(), Proj::default());
                let mut full: HashMap<(Vec<u8>, Vec<u8>, Vec<u8>), Vec<Lit>> = HashMap::new();
                let mut by_cond: HashMap<Vec<u8>, (Vec<Vec<u8>>, Vec<Vec<u8>>)> = HashMap::new();
                for (r, l) in rows {
                    let (xv, zv, yv) = (project(r, &xs), project(r, &cond), project(r, &ys));
                    let a = xz.get(self, [zv.clone(), xv.clone()].concat());
                    self.implies(*l, a)?;
                    let b = zy.get(self, [zv.clone(), yv.clone()].concat());
                    self.implies(*l, b)?;
                    let e = by_cond.entry(zv.clone()).or_default();
                    if !e.0.contains(&xv) {
                        e.0.push(xv.clone());
                    }
                    if !e.1.contains(&yv) {
                        e.1.push(yv.clone());
                    }
                    full.entry((xv, zv, yv)).or_default().push(*l);
                }
                for (zv, (xvs, yvs)) in by_cond {
                    for xv in &xvs {
                        for yv in &yvs {
                            let a = xz.0[&[zv.clone(), xv.clone()].concat()];
                            let b = zy.0[&[zv.clone(), yv.clone()].concat()];
                            let mut cl = vec![!a, !b];
                            if let Some(ls) = full.get(&(xv.clone(), zv.clone(), yv.clone())) {
                                cl.extend(ls);
                            }
                            self.clause(cl)?;
                        }
                    }
                }
            }
            Op::Induced { q, ys, x } => {
                let class = m.class(q, c);
                let mut groups: HashMap<Vec<u8>, Vec<Vec<Lit>>> = HashMap::new();
                for (r, l) in rows {
                    let g = groups
                        .entry(project(r, &ys))
                        .or_insert_with(|| vec![Vec::new(); m.n]);
                    g[r[x as usize] as usize].push(*l);
                }
                for per_value in groups.into_values() {
                    // p[a]: some row of the group has x = a.
                    let mut values = Vec::new();
                    let mut p = Vec::new();
                    for (a, ls) in per_value.iter().enumerate() {
                        if ls.is_empty() {
                            continue;
                        }
                        let pa = self.lit();
                        let mut back = vec![!pa];
                        for &l in ls {
                            self.implies(l, pa)?;
                            back.push(l);
                        }
                        self.clause(back)?;
                        values.push(a);
                        p.push(pa);
                    }
                    for s in 1u64..1 << values.len() {
                        let mask = values
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| s >> i & 1 == 1)
                            .fold(0u64, |acc, (_, &a)| acc | 1 << a);
                        if class.contains(mask) {
                            continue;
                        }
                        let cl = p
                            .iter()
                            .enumerate()
                            .map(|(i, &pa)| if s >> i & 1 == 1 { !pa } else { pa })
                            .collect();
                        self.clause(cl)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// The child row `r`, recording `parent` as one of its sources.
    fn child(&mut self, children: &mut HashMap<Row, (Lit, Vec<Lit>)>, r: Row, parent: Lit) -> Lit {
        match children.get_mut(&r) {
            Some((lc, parents)) => {
                parents.push(parent);
                *lc
            }
            None => {
                let lc = self.lit();
                children.insert(r, (lc, vec![parent]));
                lc
            }
        }
    }

    /// Child rows exist only when produced by some parent.
    fn close_children(&mut self, children: HashMap<Row, (Lit, Vec<Lit>)>) -> Result<Vec<(Row, Lit)>, Abort> {
        let mut out = Vec::with_capacity(children.len());
        for (r, (lc, parents)) in children {
            let mut cl = vec![!lc];
            cl.extend(parents);
            self.clause(cl)?;
            out.push((r, lc));
        }
        out.sort_unstable_by_key(|(r, _)| *r);
        Ok(out)
    }

    /// At most one value of `y` per value of `ante`.
    fn functional(&mut self, rows: &[(Row, Lit)], ante: &[u8], y: u8) -> Result<(), Abort> {
        let mut groups: HashMap<Vec<u8>, HashMap<u8, Vec<Lit>>> = HashMap::new();
        for (r, l) in rows {
            groups
                .entry(project(r, ante))
                .or_default()
                .entry(r[y as usize])
                .or_default()
                .push(*l);
        }
        for by_value in groups.into_values() {
            if by_value.len() < 2 {
                continue;
            }
            let mut p = Vec::new();
            for ls in by_value.into_values() {
                let pv = self.lit();
                for l in ls {
                    self.implies(l, pv)?;
                }
                p.push(pv);
            }
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    self.clause(vec![!p[i], !p[j]])?;
                }
            }
        }
        Ok(())
    }
}

impl From<EvalError> for Abort {
    fn from(e: EvalError) -> Abort {
        Abort::Eval(e)
    }
}
