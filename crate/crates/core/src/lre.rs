//! Sentences `IY ∃X1…∃Xk φ`: a fresh nonempty set `S` named by `Y`, then
//! existential second-order relation variables over the bloated domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::evaluator::{EvalConfig, EvalError, Evaluator};
use crate::quantifiers::Registry;
use crate::structures::{all_tuples, Model, StructureError, Tuple};
use crate::syntax::{is_symbol_name, Formula, Parser, SyntaxError, Vocabulary};
use crate::teams::Assignment;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LreError {
    #[error("malformed sentence: {0}")]
    Parse(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("symbol `{0}` is already in the vocabulary")]
    SymbolClash(String),
    #[error("the matrix must be a first-order sentence: {0}")]
    NotFirstOrder(String),
    #[error("bloat budget must be at least 1")]
    ZeroBudget,
    #[error("search cap exceeded: {0}")]
    CapExceeded(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LreSentence {
    /// The unary symbol naming the fresh elements.
    pub symbol: String,
    /// Relation variables with their arities, in quantification order.
    pub eso_vars: Vec<(String, usize)>,
    pub matrix: Formula,
}

impl LreSentence {
    /// Parses `lre { I2 Y ; E2 X:2 ; <formula> }` against the base
    /// vocabulary.
    pub fn parse(text: &str, vocab: &Vocabulary, registry: &Registry) -> Result<LreSentence, LreError> {
        let err = |m: &str| LreError::Parse(m.to_string());
        let text = text.trim();
        let rest = text.strip_prefix("lre").ok_or_else(|| err("expected `lre`"))?;
        let inner = rest
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| err("expected `{ ... }`"))?;
        let parts = split_top_level(inner);
        let (formula, header) = parts.split_last().ok_or_else(|| err("empty sentence"))?;
        let mut header = header.iter().map(|s| s.trim());

        let symbol = header
            .next()
            .and_then(|s| s.strip_prefix("I2"))
            .map(str::trim)
            .filter(|s| is_symbol_name(s))
            .ok_or_else(|| err("expected `I2 <symbol>` first"))?
            .to_string();
        let mut full = vocab.clone();
        if full.contains(&symbol) {
            return Err(LreError::SymbolClash(symbol));
        }
        full.insert(&symbol, 1)?;

        let mut eso_vars = Vec::new();
        for item in header {
            let decl = item
                .strip_prefix("E2")
                .ok_or_else(|| err(&format!("expected `E2 <symbol>:<arity>`, found `{item}`")))?;
            let (name, arity) = decl
                .split_once(':')
                .ok_or_else(|| err(&format!("missing arity in `{item}`")))?;
            let name = name.trim();
            let arity: usize = arity
                .trim()
                .parse()
                .map_err(|_| err(&format!("bad arity in `{item}`")))?;
            if !is_symbol_name(name) {
                return Err(err(&format!("`{name}` is not a symbol name")));
            }
            if full.contains(name) {
                return Err(LreError::SymbolClash(name.to_string()));
            }
            full.insert(name, arity)?;
            eso_vars.push((name.to_string(), arity));
        }

        let matrix = Parser::new(&full, registry).parse(formula)?;
        if !matrix.is_fo_q() || !matrix.is_sentence() {
            return Err(LreError::NotFirstOrder(matrix.to_string()));
        }
        Ok(LreSentence {
            symbol,
            eso_vars,
            matrix,
        })
    }
}

impl fmt::Display for LreSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lre {{ I2 {} ; ", self.symbol)?;
        for (name, arity) in &self.eso_vars {
            write!(f, "E2 {name}:{arity} ; ")?;
        }
        write!(f, "{} }}", self.matrix)
    }
}

/// Splits at `;` outside parentheses.
fn split_top_level(text: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut depth = 0i32;
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth == 0 => {
                parts.push(String::new());
                continue;
            }
            _ => {}
        }
        parts.last_mut().expect("nonempty").push(c);
    }
    parts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LreConfig {
    pub budget: usize,
    /// Interpretations of the relation variables tried, over all bloat sizes.
    pub max_assignments: u64,
}

impl Default for LreConfig {
    fn default() -> LreConfig {
        LreConfig {
            budget: 2,
            max_assignments: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LreResult {
    Sat {
        bloat_size: usize,
        witness: BTreeMap<String, BTreeSet<Tuple>>,
    },
    UnsatWithinBudget,
}

impl LreResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, LreResult::Sat { .. })
    }
}

/// Tries `k = 1..=budget` fresh elements. For each `k` the relation
/// variables are enumerated by their characteristic bit strings (tuples in
/// lexicographic order, variables in declaration order), least first.
pub fn eval_lre(
    model: &Model,
    sentence: &LreSentence,
    cfg: &LreConfig,
    registry: &Registry,
) -> Result<LreResult, LreError> {
    if cfg.budget == 0 {
        return Err(LreError::ZeroBudget);
    }
    for (name, _) in std::iter::once(&(sentence.symbol.clone(), 1)).chain(&sentence.eso_vars) {
        if model.vocab().contains(name) {
            return Err(LreError::SymbolClash(name.clone()));
        }
    }
    let evaluator = Evaluator::new(registry.clone(), EvalConfig::default());
    let prepared = evaluator.prepare(&sentence.matrix, &[])?;
    let mut tried: u64 = 0;
    for k in 1..=cfg.budget {
        let bloated = model.bloat(k)?;
        let fresh: BTreeSet<_> = bloated.fresh_elements().into_iter().collect();
        let base = bloated.expand_unary(&sentence.symbol, &fresh)?;
        let tuples: Vec<Vec<Tuple>> = sentence
            .eso_vars
            .iter()
            .map(|(_, arity)| all_tuples(base.domain(), *arity))
            .collect();
        let bits: usize = tuples.iter().map(Vec::len).sum();
        let space = 1u64.checked_shl(bits as u32).filter(|_| bits < 64);
        match space {
            Some(space) if tried + space <= cfg.max_assignments => tried += space,
            _ => {
                return Err(LreError::CapExceeded(format!(
                    "{bits} relation bits at bloat size {k} exceed {} interpretations",
                    cfg.max_assignments
                )))
            }
        }
        for code in 0..1u64 << bits {
            // Bit 0 of the string is the most significant bit of `code`.
            let mut pos = bits;
            let mut expanded = base.clone();
            let mut witness = BTreeMap::new();
            for ((name, arity), ts) in sentence.eso_vars.iter().zip(&tuples) {
                let rel: BTreeSet<Tuple> = ts
                    .iter()
                    .filter(|_| {
                        pos -= 1;
                        code >> pos & 1 == 1
                    })
                    .cloned()
                    .collect();
                expanded = expanded.expand(name, *arity, rel.iter().cloned())?;
                witness.insert(name.clone(), rel);
            }
            if prepared.tarski(&expanded, &Assignment::empty())? {
                return Ok(LreResult::Sat {
                    bloat_size: k,
                    witness,
                });
            }
        }
    }
    Ok(LreResult::UnsatWithinBudget)
}

/// `X` is a perfect matching of the whole domain: symmetric, irreflexive,
/// and every element has exactly one partner.
pub const PERFECT_MATCHING: &str = "lre { I2 Y ; E2 X:2 ; \
    A a (A b (~X(a,b) | X(b,a)) & (~X(a,a) & E b (X(a,b) & A c (~X(a,c) | c=b)))) }";

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_vocab() -> Vocabulary {
        Vocabulary::new()
    }

    fn run(text: &str, n: usize, budget: usize) -> LreResult {
        let reg = Registry::builtin();
        let s = LreSentence::parse(text, &empty_vocab(), &reg).unwrap();
        let m = Model::new(empty_vocab(), n).unwrap();
        eval_lre(
            &m,
            &s,
            &LreConfig {
                budget,
                ..LreConfig::default()
            },
            &reg,
        )
        .unwrap()
    }

    #[test]
    fn fresh_set_is_nonempty() {
        assert!(matches!(
            run("lre { I2 Y ; E x Y(x) }", 2, 1),
            LreResult::Sat { bloat_size: 1, .. }
        ));
        assert_eq!(run("lre { I2 Y ; A x ~Y(x) }", 2, 3), LreResult::UnsatWithinBudget);
    }

    #[test]
    fn perfect_matching_parity() {
        match run(PERFECT_MATCHING, 3, 2) {
            LreResult::Sat { bloat_size, witness } => {
                assert_eq!(bloat_size, 1);
                assert_eq!(witness["X"].len(), 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            run(PERFECT_MATCHING, 2, 2),
            LreResult::Sat { bloat_size: 2, .. }
        ));
        assert_eq!(run(PERFECT_MATCHING, 2, 1), LreResult::UnsatWithinBudget);
    }

    #[test]
    fn least_witness_comes_first() {
        // The first relation in bit-string order that is nonempty on Y.
        match run("lre { I2 Y ; E2 X:1 ; E x (X(x) & Y(x)) }", 1, 1) {
            LreResult::Sat { witness, .. } => {
                let x: Vec<String> = witness["X"].iter().map(|t| t[0].to_string()).collect();
                assert_eq!(x, ["f1"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        let reg = Registry::builtin();
        let v = Vocabulary::parse("P/1").unwrap();
        assert!(matches!(
            LreSentence::parse("lre { I2 P ; E x P(x) }", &v, &reg),
            Err(LreError::SymbolClash(_))
        ));
        assert!(matches!(
            LreSentence::parse("lre { E2 X:1 ; E x X(x) }", &v, &reg),
            Err(LreError::Parse(_))
        ));
        assert!(matches!(
            LreSentence::parse("lre { I2 Y ; E x =(x) }", &v, &reg),
            Err(LreError::NotFirstOrder(_))
        ));
        let s = LreSentence::parse("lre { I2 Y ; E2 X:2 ; E x X(x,x) }", &v, &reg).unwrap();
        assert_eq!(LreSentence::parse(&s.to_string(), &v, &reg).unwrap(), s);
    }

    #[test]
    fn cap_is_reported() {
        let reg = Registry::builtin();
        let s = LreSentence::parse("lre { I2 Y ; E2 X:3 ; E x X(x,x,x) }", &empty_vocab(), &reg).unwrap();
        let m = Model::new(empty_vocab(), 3).unwrap();
        assert!(matches!(
            eval_lre(&m, &s, &LreConfig::default(), &reg),
            Err(LreError::CapExceeded(_))
        ));
    }
}
