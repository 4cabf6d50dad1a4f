//! `model { domain: N relation R/k: (a1,...,ak) ... }`

use std::fmt;

use super::{Element, Model, StructureError};
use crate::syntax::Vocabulary;

fn err(msg: impl Into<String>) -> StructureError {
    StructureError::Parse(msg.into())
}

/// Splits on whitespace, keeping `{ } ( ) , :` as separate tokens.
pub(crate) fn tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() * 2);
    for c in text.chars() {
        if "{}(),:".contains(c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

pub fn parse_model(text: &str) -> Result<Model, StructureError> {
    let toks = tokens(text);
    let mut it = toks.iter().map(String::as_str).peekable();
    let expect = |want: &str, it: &mut dyn Iterator<Item = &str>| match it.next() {
        Some(t) if t == want => Ok(()),
        other => Err(err(format!("expected `{want}`, found {other:?}"))),
    };
    expect("model", &mut it)?;
    expect("{", &mut it)?;
    expect("domain", &mut it)?;
    expect(":", &mut it)?;
    let size: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err("domain size must be a natural number"))?;

    let mut decls: Vec<(String, usize, Vec<Vec<Element>>)> = Vec::new();
    loop {
        match it.next() {
            Some("}") => break,
            Some("relation") => {}
            other => return Err(err(format!("expected `relation` or `}}`, found {other:?}"))),
        }
        let decl = it.next().ok_or_else(|| err("missing relation declaration"))?;
        let (name, arity) = decl
            .split_once('/')
            .ok_or_else(|| err(format!("`{decl}` is not NAME/ARITY")))?;
        let arity: usize = arity
            .parse()
            .map_err(|_| err(format!("bad arity in `{decl}`")))?;
        expect(":", &mut it)?;
        let mut tuples = Vec::new();
        while it.peek() == Some(&"(") {
            it.next();
            let mut tuple = Vec::new();
            loop {
                let t = it.next().ok_or_else(|| err("unterminated tuple"))?;
                let i: u32 = t
                    .parse()
                    .map_err(|_| err(format!("`{t}` is not an element index")))?;
                tuple.push(Element::Base(i));
                match it.next() {
                    Some(",") => {}
                    Some(")") => break,
                    other => return Err(err(format!("expected `,` or `)`, found {other:?}"))),
                }
            }
            tuples.push(tuple);
        }
        decls.push((name.to_string(), arity, tuples));
    }
    if let Some(t) = it.next() {
        return Err(err(format!("trailing input `{t}`")));
    }

    let mut vocab = Vocabulary::new();
    for (name, arity, _) in &decls {
        vocab.insert(name, *arity)?;
    }
    let mut model = Model::new(vocab, size)?;
    for (name, _, tuples) in decls {
        model.set_relation(&name, tuples)?;
    }
    Ok(model)
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fresh = self.fresh_elements();
        write!(f, "model {{ domain: {}", self.size() - fresh.len())?;
        if !fresh.is_empty() {
            let names: Vec<String> = fresh.iter().map(Element::to_string).collect();
            write!(f, " + {}", names.join(" "))?;
        }
        for (name, arity) in self.vocab().iter() {
            write!(f, "\n  relation {name}/{arity}:")?;
            for t in self.relation(name).expect("declared") {
                let parts: Vec<String> = t.iter().map(Element::to_string).collect();
                write!(f, " ({})", parts.join(","))?;
            }
        }
        write!(f, " }}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "model { domain: 3\n  relation E/2: (0,1) (2,2)\n  relation P/1: (1) }";
        let m = parse_model(text).unwrap();
        assert_eq!(m.size(), 3);
        assert!(m.holds("E", &[Element::Base(2), Element::Base(2)]));
        assert_eq!(m.to_string(), text);
        assert_eq!(parse_model(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn fresh_elements_only_in_output() {
        let m = parse_model("model { domain: 1 relation P/1: }").unwrap();
        let b = m.bloat(2).unwrap();
        assert!(b.to_string().contains("+ f1 f2"));
        assert!(parse_model("model { domain: 1 relation P/1: (f1) }").is_err());
    }

    #[test]
    fn errors() {
        assert!(parse_model("model { domain: 0 }").is_err());
        assert!(parse_model("model { domain: 2 relation P/1: (2) }").is_err());
        assert!(parse_model("model { domain: 2 relation P/1: (0,1) }").is_err());
        assert!(parse_model("model { domain: 2 relation P/1: relation P/1: }").is_err());
        assert!(parse_model("model { domain: 2 ").is_err());
    }
}
