use std::fmt;

use super::{all_tuples, Element, Model, StructureError};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `0^|A| · 1 · enc(R_1) · … · enc(R_p)` where `enc(R)` has one bit per
/// `k`-tuple in the lexicographic order induced by `order`.
pub fn encode_model(
    model: &Model,
    order: &[Element],
    symbol_order: &[&str],
) -> Result<BitString, StructureError> {
    let mut sorted_order = order.to_vec();
    sorted_order.sort();
    let mut sorted_domain = model.domain().to_vec();
    sorted_domain.sort();
    if sorted_order != sorted_domain {
        return Err(StructureError::BadOrder);
    }
    let mut syms = symbol_order.to_vec();
    syms.sort();
    syms.dedup();
    let declared: Vec<&str> = model.vocab().iter().map(|(s, _)| s).collect();
    if syms.len() != symbol_order.len() || syms != declared {
        return Err(StructureError::BadSymbolOrder);
    }

    let mut bits = vec![false; model.size()];
    bits.push(true);
    for symbol in symbol_order {
        let arity = model.vocab().arity(symbol).expect("checked above");
        bits.extend(
            all_tuples(order, arity)
                .iter()
                .map(|t| model.holds(symbol, t)),
        );
    }
    Ok(BitString(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Vocabulary;

    const A: Element = Element::Base(0);
    const B: Element = Element::Base(1);

    fn model(v: &str, sym: &str, tuples: &[&[u32]]) -> Model {
        Model::new(Vocabulary::parse(v).unwrap(), 2)
            .unwrap()
            .with(sym, tuples)
            .unwrap()
    }

    #[test]
    fn unary_relation() {
        let m = model("R/1", "R", &[&[1]]);
        assert_eq!(encode_model(&m, &[A, B], &["R"]).unwrap().to_string(), "00101");
    }

    #[test]
    fn binary_relation() {
        let m = model("E/2", "E", &[&[0, 1]]);
        assert_eq!(
            encode_model(&m, &[A, B], &["E"]).unwrap().to_string(),
            "0010100"
        );
    }

    #[test]
    fn order_changes_the_encoding() {
        let m = model("R/1", "R", &[&[1]]);
        assert_eq!(encode_model(&m, &[B, A], &["R"]).unwrap().to_string(), "00110");
    }

    #[test]
    fn rejects_bad_orders() {
        let m = model("R/1", "R", &[&[1]]);
        assert_eq!(encode_model(&m, &[A, A], &["R"]), Err(StructureError::BadOrder));
        assert_eq!(encode_model(&m, &[A], &["R"]), Err(StructureError::BadOrder));
        assert_eq!(
            encode_model(&m, &[A, B], &["R", "R"]),
            Err(StructureError::BadSymbolOrder)
        );
        assert_eq!(encode_model(&m, &[A, B], &[]), Err(StructureError::BadSymbolOrder));
    }
}
