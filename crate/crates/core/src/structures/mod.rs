//! Finite relational models, bloating, expansions, word models, binary
//! encodings and exhaustive small-model enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{SyntaxError, Vocabulary};

mod encode;
mod text;
mod word;

pub use encode::{encode_model, BitString};
pub use text::parse_model;
pub(crate) use text::tokens;
pub use word::{is_word_model, model_to_word, word_to_model, word_vocabulary, SUCC};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("bloating needs at least one fresh element")]
    EmptyBloat,
    #[error("relation symbol `{0}` is already in the vocabulary")]
    SymbolClash(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("element {0} is not in the domain")]
    ElementOutsideDomain(Element),
    #[error("tuple for `{symbol}` has length {found}, expected {expected}")]
    TupleArity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("character `{0}` is not in the alphabet")]
    NotInAlphabet(char),
    #[error("order is not a permutation of the domain")]
    BadOrder,
    #[error("symbol order does not list the vocabulary exactly once")]
    BadSymbolOrder,
    #[error("model space of {0} models exceeds the cap")]
    CapExceeded(u128),
    #[error("domain size must be positive")]
    EmptyDomain,
    #[error("model syntax: {0}")]
    Parse(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// A domain element: either from the original model or added by bloating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Base(u32),
    Fresh(u32),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Base(i) => write!(f, "{i}"),
            Element::Fresh(i) => write!(f, "f{i}"),
        }
    }
}

pub type Tuple = Vec<Element>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    vocab: Vocabulary,
    domain: Vec<Element>,
    interp: BTreeMap<String, BTreeSet<Tuple>>,
}

impl Model {
    /// Model with domain `{0..size-1}` and every relation empty.
    pub fn new(vocab: Vocabulary, size: usize) -> Result<Model, StructureError> {
        if size == 0 {
            return Err(StructureError::EmptyDomain);
        }
        let interp = vocab
            .iter()
            .map(|(name, _)| (name.to_string(), BTreeSet::new()))
            .collect();
        Ok(Model {
            vocab,
            domain: (0..size as u32).map(Element::Base).collect(),
            interp,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn domain(&self) -> &[Element] {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn contains_element(&self, e: Element) -> bool {
        self.domain.contains(&e)
    }

    pub fn relation(&self, symbol: &str) -> Option<&BTreeSet<Tuple>> {
        self.interp.get(symbol)
    }

    pub fn holds(&self, symbol: &str, tuple: &[Element]) -> bool {
        self.interp
            .get(symbol)
            .is_some_and(|r| r.contains(tuple))
    }

    /// Replaces the interpretation of `symbol`.
    pub fn set_relation(
        &mut self,
        symbol: &str,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<(), StructureError> {
        let arity = self
            .vocab
            .arity(symbol)
            .ok_or_else(|| StructureError::UnknownSymbol(symbol.to_string()))?;
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(StructureError::TupleArity {
                    symbol: symbol.to_string(),
                    expected: arity,
                    found: t.len(),
                });
            }
            if let Some(e) = t.iter().find(|e| !self.domain.contains(e)) {
                return Err(StructureError::ElementOutsideDomain(*e));
            }
            set.insert(t);
        }
        self.interp.insert(symbol.to_string(), set);
        Ok(())
    }

    /// Builder-style [`Model::set_relation`] over base elements.
    pub fn with(mut self, symbol: &str, tuples: &[&[u32]]) -> Result<Model, StructureError> {
        let tuples = tuples
            .iter()
            .map(|t| t.iter().map(|&i| Element::Base(i)).collect());
        self.set_relation(symbol, tuples)?;
        Ok(self)
    }

    /// Number of fresh elements.
    pub fn bloat_level(&self) -> u32 {
        self.domain
            .iter()
            .filter_map(|e| match e {
                Element::Fresh(i) => Some(*i),
                Element::Base(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Adds `k` fresh elements, leaving every relation unchanged. Fresh
    /// levels continue after those already present, so bloating twice by one
    /// equals bloating once by two.
    pub fn bloat(&self, k: usize) -> Result<Model, StructureError> {
        if k == 0 {
            return Err(StructureError::EmptyBloat);
        }
        let mut m = self.clone();
        let start = self.bloat_level();
        m.domain
            .extend((1..=k as u32).map(|i| Element::Fresh(start + i)));
        Ok(m)
    }

    /// The fresh elements, in level order.
    pub fn fresh_elements(&self) -> Vec<Element> {
        self.domain
            .iter()
            .copied()
            .filter(|e| matches!(e, Element::Fresh(_)))
            .collect()
    }

    /// Expansion by a new unary symbol interpreted as `set`.
    pub fn expand_unary(
        &self,
        symbol: &str,
        set: &BTreeSet<Element>,
    ) -> Result<Model, StructureError> {
        self.expand(symbol, 1, set.iter().map(|e| vec![*e]))
    }

    /// Expansion by a new symbol of any arity.
    pub fn expand(
        &self,
        symbol: &str,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Model, StructureError> {
        if self.vocab.contains(symbol) {
            return Err(StructureError::SymbolClash(symbol.to_string()));
        }
        let mut m = self.clone();
        m.vocab.insert(symbol, arity)?;
        m.interp.insert(symbol.to_string(), BTreeSet::new());
        m.set_relation(symbol, tuples)?;
        Ok(m)
    }

    /// The reduct to the symbols in `names`.
    pub fn reduct(&self, names: &BTreeSet<String>) -> Model {
        Model {
            vocab: self.vocab.restrict(names),
            domain: self.domain.clone(),
            interp: self
                .interp
                .iter()
                .filter(|(k, _)| names.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Every `k`-tuple over `domain`, in lexicographic order of positions.
pub fn all_tuples(domain: &[Element], k: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |e| {
                    let mut t = t.clone();
                    t.push(*e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Default cap on the number of enumerated models.
pub const MODEL_CAP: u128 = 1 << 24;

/// Every labeled model over `vocab` with domain `{0..size-1}`. Relations are
/// filled from a counter whose bits run over symbols in vocabulary order and
/// tuples in lexicographic order, the first tuple of the first symbol being
/// the least significant bit.
pub fn enumerate_models(
    vocab: &Vocabulary,
    size: usize,
    cap: u128,
) -> Result<impl Iterator<Item = Model>, StructureError> {
    let template = Model::new(vocab.clone(), size)?;
    let slots: Vec<(String, Tuple)> = vocab
        .iter()
        .flat_map(|(name, arity)| {
            all_tuples(template.domain(), arity)
                .into_iter()
                .map(move |t| (name.to_string(), t))
        })
        .collect();
    let count = 1u128.checked_shl(slots.len() as u32).unwrap_or(u128::MAX);
    if slots.len() >= 127 || count > cap {
        return Err(StructureError::CapExceeded(count));
    }
    Ok((0..count).map(move |mask| {
        let mut m = template.clone();
        for (i, (name, t)) in slots.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m.interp.get_mut(name).expect("declared").insert(t.clone());
            }
        }
        m
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(s: &str) -> Vocabulary {
        Vocabulary::parse(s).unwrap()
    }

    #[test]
    fn bloat_adds_fresh_elements() {
        let m = Model::new(vocab("R/1"), 1).unwrap();
        let b = m.bloat(2).unwrap();
        assert_eq!(
            b.domain(),
            &[Element::Base(0), Element::Fresh(1), Element::Fresh(2)]
        );
        assert!(b.relation("R").unwrap().is_empty());
        assert_eq!(m.bloat(1).unwrap().bloat(1).unwrap(), b);
        assert_eq!(m.bloat(0), Err(StructureError::EmptyBloat));
    }

    #[test]
    fn expansion() {
        let m = Model::new(vocab("P/1"), 2).unwrap();
        let e = m
            .expand_unary("Y", &[Element::Base(0)].into())
            .unwrap();
        assert!(e.holds("Y", &[Element::Base(0)]));
        assert_eq!(e.vocab().arity("Y"), Some(1));
        let empty = m.expand_unary("Y", &BTreeSet::new()).unwrap();
        assert!(empty.relation("Y").unwrap().is_empty());
        assert!(matches!(
            m.expand_unary("P", &BTreeSet::new()),
            Err(StructureError::SymbolClash(_))
        ));
        assert!(m
            .expand_unary("Y", &[Element::Base(5)].into())
            .is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_models(&vocab("P/1"), 1, MODEL_CAP).unwrap().count(), 2);
        assert_eq!(enumerate_models(&vocab("P/1"), 2, MODEL_CAP).unwrap().count(), 4);
        assert_eq!(enumerate_models(&vocab("E/2"), 2, MODEL_CAP).unwrap().count(), 16);
        assert_eq!(enumerate_models(&vocab(""), 3, MODEL_CAP).unwrap().count(), 1);
        assert!(enumerate_models(&vocab("E/2"), 5, MODEL_CAP).is_err());
    }

    #[test]
    fn enumeration_is_distinct() {
        let all: Vec<Model> = enumerate_models(&vocab("P/1,E/2"), 2, MODEL_CAP)
            .unwrap()
            .collect();
        for (i, a) in all.iter().enumerate() {
            assert!(all[i + 1..].iter().all(|b| a != b));
        }
    }
}
