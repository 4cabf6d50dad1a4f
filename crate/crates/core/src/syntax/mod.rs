//! Formula syntax for first-order logic with team atoms, generalized
//! quantifiers and the domain-extension operator `I`.
//!
//! Formulas are always kept in negation normal form: the only negated nodes
//! are relational and equality literals. Team atoms (dependence, inclusion,
//! exclusion, independence, induced and generalized atoms) can never be
//! negated. Input with arbitrary negation goes through [`nnf::to_nnf`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

mod clean;
pub mod nnf;
mod parser;
mod render;
mod scope;

pub use clean::{is_clean, make_clean};
pub use nnf::{to_nnf, NnfOptions, RawFormula};
pub use parser::{parse_formula, parse_raw, Parser};
pub use scope::{scope_info, Position, ScopeEntry, ScopeInfo};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("undeclared relation symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("relation `{symbol}` has arity {expected}, used with {found} arguments")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("negated team atom at offset {offset}")]
    NegatedTeamAtom { offset: usize },
    #[error("unknown quantifier `{0}`")]
    UnknownQuantifier(String),
    #[error("quantifier `{name}` has type {expected:?}, used with {found:?}")]
    QuantifierType {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("team atom under negation: {0}")]
    TeamAtomUnderNegation(String),
    #[error("I operator under negation")]
    IUnderNegation,
    #[error("invalid vocabulary entry: {0}")]
    Vocabulary(String),
}

/// A first-order variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Var {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// `[a-z][a-z0-9_']*`
    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '\'')
    }
}

impl From<&str> for Var {
    fn from(name: &str) -> Var {
        Var(name.to_string())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Relation symbols with their arities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Vocabulary {
        Vocabulary::default()
    }

    /// Builds a vocabulary from `(name, arity)` pairs, rejecting duplicates
    /// and zero arities.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, usize)>,
    ) -> Result<Vocabulary, SyntaxError> {
        let mut vocab = Vocabulary::new();
        for (name, arity) in pairs {
            vocab.insert(name, arity)?;
        }
        Ok(vocab)
    }

    /// Parses the compact form `P/1,E/2`.
    pub fn parse(text: &str) -> Result<Vocabulary, SyntaxError> {
        let mut vocab = Vocabulary::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, arity) = item
                .split_once('/')
                .ok_or_else(|| SyntaxError::Vocabulary(format!("`{item}` is not NAME/ARITY")))?;
            let arity = arity
                .trim()
                .parse::<usize>()
                .map_err(|_| SyntaxError::Vocabulary(format!("bad arity in `{item}`")))?;
            vocab.insert(name.trim(), arity)?;
        }
        Ok(vocab)
    }

    pub fn insert(&mut self, name: &str, arity: usize) -> Result<(), SyntaxError> {
        if arity == 0 {
            return Err(SyntaxError::Vocabulary(format!("`{name}` has arity 0")));
        }
        if !is_symbol_name(name) {
            return Err(SyntaxError::Vocabulary(format!("`{name}` is not a symbol name")));
        }
        if self.symbols.contains_key(name) {
            return Err(SyntaxError::Vocabulary(format!("`{name}` declared twice")));
        }
        self.symbols.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// The sub-vocabulary of symbols in `names`.
    pub fn restrict(&self, names: &BTreeSet<String>) -> Vocabulary {
        Vocabulary {
            symbols: self
                .symbols
                .iter()
                .filter(|(k, _)| names.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, arity)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{name}/{arity}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_symbol_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// The atomic part of a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Rel { symbol: String, args: Vec<Var> },
    Eq(Var, Var),
}

impl Atom {
    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Atom::Rel { args, .. } => args.iter().collect(),
            Atom::Eq(a, b) => vec![a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Literal {
        positive: bool,
        atom: Atom,
    },
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
    /// `Q{name} x φ`, or `Qd{name} x φ` when `dual` is set.
    GenQuant {
        quantifier: String,
        dual: bool,
        var: Var,
        body: Box<Formula>,
    },
    /// Domain extension `I x φ`.
    IOp(Var, Box<Formula>),
    /// `=(x1,...,xk)`: the last variable is determined by the others.
    Dep(Vec<Var>),
    Inclusion(Vec<Var>, Vec<Var>),
    Exclusion(Vec<Var>, Vec<Var>),
    /// `xs ⊥_cond ys`; an empty `cond` is pure independence.
    Indep {
        xs: Vec<Var>,
        cond: Vec<Var>,
        ys: Vec<Var>,
    },
    /// The atom induced by a type (1) quantifier, grouped by `ys`.
    Induced {
        quantifier: String,
        ys: Vec<Var>,
        x: Var,
    },
    General {
        quantifier: String,
        tuples: Vec<Vec<Var>>,
    },
}

impl Formula {
    pub fn rel(symbol: &str, args: &[&str]) -> Formula {
        Formula::Literal {
            positive: true,
            atom: Atom::Rel {
                symbol: symbol.to_string(),
                args: args.iter().map(|a| Var::from(*a)).collect(),
            },
        }
    }

    pub fn eq(a: &str, b: &str) -> Formula {
        Formula::Literal {
            positive: true,
            atom: Atom::Eq(a.into(), b.into()),
        }
    }

    /// Negates a literal. Returns `None` for any other node.
    pub fn negate_literal(&self) -> Option<Formula> {
        match self {
            Formula::Literal { positive, atom } => Some(Formula::Literal {
                positive: !positive,
                atom: atom.clone(),
            }),
            _ => None,
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(x: impl Into<Var>, body: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(body))
    }

    pub fn forall(x: impl Into<Var>, body: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(body))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Formula::Literal { .. })
    }

    pub fn is_team_atom(&self) -> bool {
        matches!(
            self,
            Formula::Dep(_)
                | Formula::Inclusion(..)
                | Formula::Exclusion(..)
                | Formula::Indep { .. }
                | Formula::Induced { .. }
                | Formula::General { .. }
        )
    }

    /// The variable bound at this node, if it is a binder.
    pub fn binder(&self) -> Option<&Var> {
        match self {
            Formula::Exists(x, _) | Formula::Forall(x, _) | Formula::IOp(x, _) => Some(x),
            Formula::GenQuant { var, .. } => Some(var),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) | Formula::Or(a, b) => vec![a, b],
            Formula::Exists(_, body) | Formula::Forall(_, body) | Formula::IOp(_, body) => {
                vec![body]
            }
            Formula::GenQuant { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Every variable occurring in a leaf of this node (not binders).
    pub fn leaf_vars(&self) -> Vec<&Var> {
        match self {
            Formula::Literal { atom, .. } => atom.vars(),
            Formula::Dep(xs) => xs.iter().collect(),
            Formula::Inclusion(xs, ys) | Formula::Exclusion(xs, ys) => xs.iter().chain(ys).collect(),
            Formula::Indep { xs, cond, ys } => xs.iter().chain(cond).chain(ys).collect(),
            Formula::Induced { ys, x, .. } => ys.iter().chain(std::iter::once(x)).collect(),
            Formula::General { tuples, .. } => tuples.iter().flatten().collect(),
            _ => Vec::new(),
        }
    }

    /// Free variables. Variables in team atoms count as free occurrences.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a Var>, out: &mut BTreeSet<Var>) {
        if let Some(x) = self.binder() {
            bound.push(x);
            for child in self.children() {
                child.collect_free(bound, out);
            }
            bound.pop();
            return;
        }
        for v in self.leaf_vars() {
            if !bound.contains(&v) {
                out.insert(v.clone());
            }
        }
        for child in self.children() {
            child.collect_free(bound, out);
        }
    }

    /// All variable names occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Some(x) = node.binder() {
                out.insert(x.clone());
            }
            out.extend(node.leaf_vars().into_iter().cloned());
        });
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for child in self.children() {
            child.visit(f);
        }
    }

    pub fn any(&self, pred: impl Fn(&Formula) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |n| found |= pred(n));
        found
    }

    pub fn contains_team_atom(&self) -> bool {
        self.any(Formula::is_team_atom)
    }

    pub fn contains_i(&self) -> bool {
        self.any(|n| matches!(n, Formula::IOp(..)))
    }

    /// Nesting depth of connectives and binders; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self.children().as_slice() {
            [] => 0,
            children => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Relation symbols used in literals.
    pub fn relation_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Formula::Literal {
                atom: Atom::Rel { symbol, .. },
                ..
            } = node
            {
                out.insert(symbol.clone());
            }
        });
        out
    }

    /// Quantifier names referenced by `Q{..}`, `iatom{..}` and `gatom{..}`.
    pub fn quantifier_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| match node {
            Formula::GenQuant { quantifier, .. }
            | Formula::Induced { quantifier, .. }
            | Formula::General { quantifier, .. } => {
                out.insert(quantifier.clone());
            }
            _ => {}
        });
        out
    }

    /// Literals, `=(..)`, `∧`, `∨`, `∃`, `∀` only.
    pub fn is_dependence_logic(&self) -> bool {
        !self.any(|n| {
            !matches!(
                n,
                Formula::Literal { .. }
                    | Formula::Dep(_)
                    | Formula::And(..)
                    | Formula::Or(..)
                    | Formula::Exists(..)
                    | Formula::Forall(..)
            )
        })
    }

    /// First-order logic with generalized quantifiers: no team atoms, no `I`.
    pub fn is_fo_q(&self) -> bool {
        !self.contains_team_atom() && !self.contains_i()
    }

    /// Counts nodes matching `pred`.
    pub fn count(&self, pred: impl Fn(&Formula) -> bool) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if pred(node) {
                n += 1;
            }
        });
        n
    }

    /// Renames variables in leaves and binders with `f`.
    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Formula {
        let vs = |xs: &[Var]| xs.iter().map(f).collect::<Vec<_>>();
        match self {
            Formula::Literal { positive, atom } => Formula::Literal {
                positive: *positive,
                atom: match atom {
                    Atom::Rel { symbol, args } => Atom::Rel {
                        symbol: symbol.clone(),
                        args: vs(args),
                    },
                    Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
                },
            },
            Formula::And(a, b) => Formula::and(a.map_vars(f), b.map_vars(f)),
            Formula::Or(a, b) => Formula::or(a.map_vars(f), b.map_vars(f)),
            Formula::Exists(x, body) => Formula::Exists(f(x), Box::new(body.map_vars(f))),
            Formula::Forall(x, body) => Formula::Forall(f(x), Box::new(body.map_vars(f))),
            Formula::IOp(x, body) => Formula::IOp(f(x), Box::new(body.map_vars(f))),
            Formula::GenQuant {
                quantifier,
                dual,
                var,
                body,
            } => Formula::GenQuant {
                quantifier: quantifier.clone(),
                dual: *dual,
                var: f(var),
                body: Box::new(body.map_vars(f)),
            },
            Formula::Dep(xs) => Formula::Dep(vs(xs)),
            Formula::Inclusion(xs, ys) => Formula::Inclusion(vs(xs), vs(ys)),
            Formula::Exclusion(xs, ys) => Formula::Exclusion(vs(xs), vs(ys)),
            Formula::Indep { xs, cond, ys } => Formula::Indep {
                xs: vs(xs),
                cond: vs(cond),
                ys: vs(ys),
            },
            Formula::Induced { quantifier, ys, x } => Formula::Induced {
                quantifier: quantifier.clone(),
                ys: vs(ys),
                x: f(x),
            },
            Formula::General { quantifier, tuples } => Formula::General {
                quantifier: quantifier.clone(),
                tuples: tuples.iter().map(|t| vs(t)).collect(),
            },
        }
    }
}

/// Picks `base` + the smallest numeric suffix that is not in `used`.
/// Trailing digits of `base` are dropped first, so re-freshening `x1`
/// gives `x2` rather than `x11`.
pub fn fresh_var(base: &Var, used: &BTreeSet<Var>) -> Var {
    let stem = base.name().trim_end_matches(|c: char| c.is_ascii_digit());
    (1..)
        .map(|i| Var(format!("{stem}{i}")))
        .find(|v| !used.contains(v))
        .expect("unbounded suffix search")
}
