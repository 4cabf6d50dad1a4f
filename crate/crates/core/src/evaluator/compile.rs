//! Compiled formulas and models: variables become slot indices, relations
//! become bit tables, quantifier classes are materialized per domain size.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use super::EvalError;
use crate::quantifiers::{derive, DeriveMode, Quantifier, Registry};
use crate::structures::{Element, Model};
use crate::syntax::{Atom, Formula, Var};

pub(crate) const MAX_VARS: usize = 16;
pub(crate) const UNSET: u8 = u8::MAX;

/// One assignment: slot `i` holds the domain position of variable `i`, or
/// [`UNSET`].
pub(crate) type Row = [u8; MAX_VARS];
pub(crate) type Mask = u16;
pub(crate) const ALL: Mask = Mask::MAX;

pub(crate) fn bit(slot: u8) -> Mask {
    1 << slot
}

pub(crate) fn mask_of(slots: &[u8]) -> Mask {
    slots.iter().fold(0, |m, &s| m | bit(s))
}

pub(crate) fn project(row: &Row, slots: &[u8]) -> Vec<u8> {
    slots.iter().map(|&s| row[s as usize]).collect()
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Rel { positive: bool, rel: usize, args: Vec<u8> },
    Eq { positive: bool, a: u8, b: u8 },
    And(usize, usize),
    Or(usize, usize),
    Exists(u8, usize),
    Forall(u8, usize),
    /// Quantifier index with duality already applied.
    Quant(usize, u8, usize),
    I(u8, usize),
    Dep(Vec<u8>, u8),
    Inc(Vec<u8>, Vec<u8>),
    Exc(Vec<u8>, Vec<u8>),
    Indep { xs: Vec<u8>, cond: Vec<u8>, ys: Vec<u8> },
    Induced { q: usize, ys: Vec<u8>, x: u8 },
    General { q: usize, tuples: Vec<Vec<u8>> },
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub op: Op,
    pub text: String,
    /// No team atoms and no `I`.
    pub flat: bool,
    pub has_i: bool,
    /// Contains a generalized atom other than `D_k`; such nodes may fail on
    /// the empty team.
    pub has_general: bool,
    /// Downward closed on every model, apart from induced atoms whose
    /// closure depends on the domain size.
    pub static_dc: bool,
    /// Quantifiers used by induced atoms in this subtree.
    pub induced_qs: Vec<usize>,
    /// Quantifiers used by `Q` nodes in this subtree, outside `I`.
    pub quant_qs: Vec<usize>,
    /// Variables `K` such that the node holds on a team iff it holds on
    /// every maximal subteam constant on any `K' ⊆ K`.
    pub locality: Mask,
    /// Downward closed team atoms that must hold on this node's team.
    pub guards: Vec<usize>,
}

pub(crate) struct Compiled {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub vars: Vec<Var>,
    pub symbols: Vec<(String, usize)>,
    pub quants: Vec<Quantifier>,
}

impl Compiled {
    pub fn compile(
        formula: &Formula,
        extra_vars: &[Var],
        registry: &Registry,
    ) -> Result<Compiled, EvalError> {
        let mut vars: BTreeSet<Var> = formula.all_vars();
        vars.extend(extra_vars.iter().cloned());
        if vars.len() > MAX_VARS {
            return Err(EvalError::TooManyVariables(vars.len()));
        }
        let mut c = Compiled {
            nodes: Vec::new(),
            root: 0,
            vars: vars.into_iter().collect(),
            symbols: Vec::new(),
            quants: Vec::new(),
        };
        c.root = c.add(formula, registry)?;
        Ok(c)
    }

    pub fn slot(&self, v: &Var) -> u8 {
        self.vars.binary_search(v).expect("variable was collected") as u8
    }

    pub fn try_slot(&self, v: &Var) -> Option<u8> {
        self.vars.binary_search(v).ok().map(|i| i as u8)
    }

    fn slots(&self, vs: &[Var]) -> Vec<u8> {
        vs.iter().map(|v| self.slot(v)).collect()
    }

    fn symbol(&mut self, name: &str, arity: usize) -> usize {
        if let Some(i) = self.symbols.iter().position(|(n, _)| n == name) {
            return i;
        }
        self.symbols.push((name.to_string(), arity));
        self.symbols.len() - 1
    }

    fn quant(&mut self, q: Quantifier) -> usize {
        if let Some(i) = self.quants.iter().position(|p| p == &q) {
            return i;
        }
        self.quants.push(q);
        self.quants.len() - 1
    }

    fn lookup(&mut self, name: &str, registry: &Registry) -> Result<usize, EvalError> {
        let q = registry
            .get(name)
            .ok_or_else(|| EvalError::UnknownQuantifier(name.to_string()))?;
        Ok(self.quant(q))
    }

    fn add(&mut self, f: &Formula, registry: &Registry) -> Result<usize, EvalError> {
        let op = match f {
            Formula::Literal { positive, atom } => match atom {
                Atom::Rel { symbol, args } => Op::Rel {
                    positive: *positive,
                    rel: self.symbol(symbol, args.len()),
                    args: self.slots(args),
                },
                Atom::Eq(a, b) => Op::Eq {
                    positive: *positive,
                    a: self.slot(a),
                    b: self.slot(b),
                },
            },
            Formula::And(a, b) => Op::And(self.add(a, registry)?, self.add(b, registry)?),
            Formula::Or(a, b) => Op::Or(self.add(a, registry)?, self.add(b, registry)?),
            Formula::Exists(x, body) => Op::Exists(self.slot(x), self.add(body, registry)?),
            Formula::Forall(x, body) => Op::Forall(self.slot(x), self.add(body, registry)?),
            Formula::IOp(x, body) => Op::I(self.slot(x), self.add(body, registry)?),
            Formula::GenQuant {
                quantifier,
                dual,
                var,
                body,
            } => {
                let q = registry
                    .get(quantifier)
                    .ok_or_else(|| EvalError::UnknownQuantifier(quantifier.clone()))?;
                if !q.is_unary() {
                    return Err(EvalError::NotUnary(quantifier.clone()));
                }
                let q = if *dual {
                    derive(&q, DeriveMode::Dual).expect("unary")
                } else {
                    q
                };
                let qi = self.quant(q);
                Op::Quant(qi, self.slot(var), self.add(body, registry)?)
            }
            Formula::Dep(xs) => {
                let s = self.slots(xs);
                let (y, ante) = s.split_last().expect("nonempty dependence atom");
                Op::Dep(ante.to_vec(), *y)
            }
            Formula::Inclusion(xs, ys) => Op::Inc(self.slots(xs), self.slots(ys)),
            Formula::Exclusion(xs, ys) => Op::Exc(self.slots(xs), self.slots(ys)),
            Formula::Indep { xs, cond, ys } => Op::Indep {
                xs: self.slots(xs),
                cond: self.slots(cond),
                ys: self.slots(ys),
            },
            Formula::Induced { quantifier, ys, x } => {
                let q = self.lookup(quantifier, registry)?;
                if !self.quants[q].is_unary() {
                    return Err(EvalError::NotUnary(quantifier.clone()));
                }
                Op::Induced {
                    q,
                    ys: self.slots(ys),
                    x: self.slot(x),
                }
            }
            Formula::General { quantifier, tuples } => {
                let q = self.lookup(quantifier, registry)?;
                let found: Vec<usize> = tuples.iter().map(Vec::len).collect();
                if found != self.quants[q].qtype() {
                    return Err(EvalError::QuantifierType(quantifier.clone()));
                }
                Op::General {
                    q,
                    tuples: tuples.iter().map(|t| self.slots(t)).collect(),
                }
            }
        };
        let node = self.analyse(op, f.to_string());
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    fn analyse(&self, op: Op, text: String) -> Node {
        let child = |i: usize| &self.nodes[i];
        let mut node = Node {
            op: op.clone(),
            text,
            flat: true,
            has_i: false,
            has_general: false,
            static_dc: true,
            induced_qs: Vec::new(),
            quant_qs: Vec::new(),
            locality: ALL,
            guards: Vec::new(),
        };
        let self_id = self.nodes.len();
        let inherit = |node: &mut Node, c: &Node| {
            node.flat &= c.flat;
            node.has_i |= c.has_i;
            node.has_general |= c.has_general;
            node.static_dc &= c.static_dc;
            node.induced_qs.extend(&c.induced_qs);
            node.quant_qs.extend(&c.quant_qs);
        };
        match &op {
            Op::Rel { .. } | Op::Eq { .. } => {}
            Op::And(a, b) | Op::Or(a, b) => {
                inherit(&mut node, child(*a));
                inherit(&mut node, child(*b));
                node.locality = child(*a).locality & child(*b).locality;
                if matches!(op, Op::And(..)) {
                    node.guards = child(*a).guards.clone();
                    node.guards.extend(&child(*b).guards);
                }
            }
            Op::Exists(x, body) | Op::Forall(x, body) | Op::Quant(_, x, body) => {
                inherit(&mut node, child(*body));
                if let Op::Quant(q, ..) = op {
                    node.quant_qs.push(q);
                }
                node.locality = child(*body).locality & !bit(*x);
                // A `Q` may choose the empty set and drop rows, so its
                // body's atoms only constrain a subteam.
                if !matches!(op, Op::Quant(..)) {
                    node.guards = child(*body)
                        .guards
                    .iter()
                    .copied()
                        .filter(|&g| !self.mentions(g, *x))
                        .collect();
                }
            }
            Op::I(_, body) => {
                let c = child(*body);
                node.flat = false;
                node.has_i = true;
                node.has_general = c.has_general;
                node.static_dc = false;
                node.induced_qs = c.induced_qs.clone();
                node.locality = 0;
            }
            Op::Dep(ante, _) => {
                node.flat = false;
                node.locality = mask_of(ante);
                node.guards = vec![self_id];
            }
            Op::Inc(..) => {
                node.flat = false;
                node.static_dc = false;
                node.locality = 0;
            }
            Op::Exc(..) => {
                node.flat = false;
                node.locality = 0;
                node.guards = vec![self_id];
            }
            Op::Indep { xs, cond, ys } => {
                node.flat = false;
                node.locality = mask_of(cond);
                let covered = |v: &[u8]| mask_of(v) & !mask_of(cond) == 0;
                if covered(xs) || covered(ys) || mask_of(xs) == mask_of(ys) {
                    // Trivially true, or a functional dependence of ys on cond.
                    node.guards = vec![self_id];
                } else {
                    node.static_dc = false;
                }
            }
            Op::Induced { q, ys, .. } => {
                node.flat = false;
                node.locality = mask_of(ys);
                node.induced_qs.push(*q);
                node.guards = vec![self_id];
            }
            Op::General { q, tuples } => {
                node.flat = false;
                match self.quants[*q].dependence_arity() {
                    Some(k) => {
                        node.locality = mask_of(&tuples[0][..k - 1]);
                        node.guards = vec![self_id];
                    }
                    None => {
                        node.has_general = true;
                        node.static_dc = false;
                        node.locality = 0;
                    }
                }
            }
        }
        node.induced_qs.sort_unstable();
        node.induced_qs.dedup();
        node.quant_qs.sort_unstable();
        node.quant_qs.dedup();
        node
    }

    fn mentions(&self, atom: usize, x: u8) -> bool {
        let has = |v: &[u8]| v.contains(&x);
        match &self.nodes[atom].op {
            Op::Dep(ante, y) => has(ante) || *y == x,
            Op::Inc(a, b) | Op::Exc(a, b) => has(a) || has(b),
            Op::Indep { xs, cond, ys } => has(xs) || has(cond) || has(ys),
            Op::Induced { ys, x: z, .. } => has(ys) || *z == x,
            Op::General { tuples, .. } => tuples.iter().any(|t| has(t)),
            _ => true,
        }
    }
}

/// `Q^A` for one domain size, with derived properties.
pub(crate) struct QClass {
    pub members: Vec<bool>,
    /// Members in increasing mask order.
    pub list: Vec<u64>,
    pub monotone: bool,
    /// Nonempty members stay members when shrunk to nonempty subsets.
    pub dc_nonempty: bool,
}

impl QClass {
    pub fn new(q: &Quantifier, domain: &[Element]) -> QClass {
        let list = q.unary_class(domain).expect("unary quantifier");
        let n = domain.len();
        let mut members = vec![false; 1 << n];
        for &m in &list {
            members[m as usize] = true;
        }
        let monotone = list
            .iter()
            .all(|&m| (0..n).all(|i| members[(m | 1 << i) as usize]));
        let dc_nonempty = list.iter().all(|&m| {
            (0..n).all(|i| {
                let smaller = m & !(1 << i);
                smaller == 0 || smaller == m || members[smaller as usize]
            })
        });
        QClass {
            members,
            list,
            monotone,
            dc_nonempty,
        }
    }

    pub fn contains(&self, mask: u64) -> bool {
        self.members[mask as usize]
    }
}

/// A model compiled against a formula's symbol table.
pub(crate) struct CModel {
    /// Number of fresh elements; identifies the bloat level.
    pub level: usize,
    pub n: usize,
    pub elements: Vec<Element>,
    /// Per symbol: arity and membership bits indexed in base `n`.
    tables: Vec<(usize, Vec<bool>)>,
    /// Tuples over base elements, kept to rebuild tables after bloating.
    source: Vec<Vec<Vec<u8>>>,
    classes: std::cell::RefCell<HashMap<usize, Rc<QClass>>>,
}

impl CModel {
    pub fn new(model: &Model, c: &Compiled) -> Result<CModel, EvalError> {
        let elements = model.domain().to_vec();
        let pos = |e: &Element| elements.iter().position(|d| d == e).expect("in domain") as u8;
        let mut source = Vec::new();
        for (name, arity) in &c.symbols {
            match model.vocab().arity(name) {
                Some(a) if a == *arity => {}
                Some(a) => {
                    return Err(EvalError::Arity {
                        symbol: name.clone(),
                        expected: a,
                        found: *arity,
                    })
                }
                None => return Err(EvalError::UndeclaredSymbol(name.clone())),
            }
            let rel = model.relation(name).expect("declared");
            source.push(rel.iter().map(|t| t.iter().map(pos).collect()).collect());
        }
        Ok(CModel::build(elements, model.bloat_level() as usize, source, c))
    }

    fn build(
        elements: Vec<Element>,
        level: usize,
        source: Vec<Vec<Vec<u8>>>,
        c: &Compiled,
    ) -> CModel {
        let n = elements.len();
        let tables = c
            .symbols
            .iter()
            .zip(&source)
            .map(|((_, arity), tuples)| {
                let mut bits = vec![false; n.pow(*arity as u32)];
                for t in tuples {
                    bits[Self::index(n, t)] = true;
                }
                (*arity, bits)
            })
            .collect();
        CModel {
            level,
            n,
            elements,
            tables,
            source,
            classes: Default::default(),
        }
    }

    fn index(n: usize, t: &[u8]) -> usize {
        t.iter().fold(0, |acc, &e| acc * n + e as usize)
    }

    /// The model with `k` more fresh elements.
    pub fn bloat(&self, k: usize, c: &Compiled) -> CModel {
        let mut elements = self.elements.clone();
        elements.extend((1..=k).map(|i| Element::Fresh((self.level + i) as u32)));
        CModel::build(elements, self.level + k, self.source.clone(), c)
    }

    /// `holds` on the values of `row` at `slots`.
    pub fn holds_at(&self, rel: usize, row: &Row, slots: &[u8]) -> bool {
        let (_, bits) = &self.tables[rel];
        bits[slots.iter().fold(0, |acc, &s| acc * self.n + row[s as usize] as usize)]
    }

    pub fn class(&self, q: usize, c: &Compiled) -> Rc<QClass> {
        self.classes
            .borrow_mut()
            .entry(q)
            .or_insert_with(|| Rc::new(QClass::new(&c.quants[q], &self.elements)))
            .clone()
    }
}
