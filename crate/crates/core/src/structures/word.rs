use std::collections::{BTreeMap, BTreeSet};

use super::{Element, Model, StructureError};
use crate::syntax::Vocabulary;

pub const SUCC: &str = "Succ";

fn letter_symbol(c: char) -> String {
    format!("P_{c}")
}

/// `{Succ/2} ∪ {P_c/1 : c ∈ alphabet}`.
pub fn word_vocabulary(alphabet: &[char]) -> Result<Vocabulary, StructureError> {
    let mut vocab = Vocabulary::new();
    vocab.insert(SUCC, 2)?;
    for &c in alphabet {
        vocab.insert(&letter_symbol(c), 1)?;
    }
    Ok(vocab)
}

/// The word model of `word`: domain `{0..|word|}`, canonical successor, and
/// position `i ≥ 1` labelled with the `i`-th character. Position 0 carries no
/// letter.
pub fn word_to_model(word: &str, alphabet: &[char]) -> Result<Model, StructureError> {
    let chars: Vec<char> = word.chars().collect();
    if let Some(c) = chars.iter().find(|c| !alphabet.contains(c)) {
        return Err(StructureError::NotInAlphabet(*c));
    }
    let mut m = Model::new(word_vocabulary(alphabet)?, chars.len() + 1)?;
    let succ = (0..chars.len() as u32).map(|i| vec![Element::Base(i), Element::Base(i + 1)]);
    m.set_relation(SUCC, succ.collect::<Vec<_>>())?;
    for &c in alphabet {
        let positions = chars
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == c)
            .map(|(i, _)| vec![Element::Base(i as u32 + 1)]);
        m.set_relation(&letter_symbol(c), positions.collect::<Vec<_>>())?;
    }
    Ok(m)
}

/// The elements of `model` in successor order, if `Succ` is a successor
/// relation (a single chain through the whole domain).
fn successor_chain(model: &Model) -> Option<Vec<Element>> {
    let succ = model.relation(SUCC)?;
    let mut next = BTreeMap::new();
    let mut has_pred = BTreeSet::new();
    for t in succ {
        if next.insert(t[0], t[1]).is_some() || !has_pred.insert(t[1]) {
            return None;
        }
    }
    let starts: Vec<Element> = model
        .domain()
        .iter()
        .copied()
        .filter(|e| !has_pred.contains(e))
        .collect();
    let [mut cur] = starts[..] else { return None };
    let mut chain = vec![cur];
    while let Some(&n) = next.get(&cur) {
        chain.push(n);
        cur = n;
    }
    (chain.len() == model.size()).then_some(chain)
}

/// Checks both word-model conditions: `Succ` is a successor relation, the
/// least element carries no letter and every other element exactly one.
pub fn is_word_model(model: &Model, alphabet: &[char]) -> bool {
    model_to_word(model, alphabet).is_some()
}

/// Reads the word off a word model.
pub fn model_to_word(model: &Model, alphabet: &[char]) -> Option<String> {
    let Ok(expected) = word_vocabulary(alphabet) else {
        return None;
    };
    if model.vocab() != &expected {
        return None;
    }
    let chain = successor_chain(model)?;
    let letters = |e: Element| -> Vec<char> {
        alphabet
            .iter()
            .copied()
            .filter(|&c| model.holds(&letter_symbol(c), &[e]))
            .collect()
    };
    if !letters(chain[0]).is_empty() {
        return None;
    }
    let mut word = String::new();
    for &e in &chain[1..] {
        match letters(e)[..] {
            [c] => word.push(c),
            _ => return None,
        }
    }
    Some(word)
}
