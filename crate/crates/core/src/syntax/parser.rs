//! Recursive-descent parser for the ASCII formula grammar.
//!
//! ```text
//! phi  ::= lit | '(' phi '&' phi ')' | '(' phi '|' phi ')'
//!        | 'E' var phi | 'A' var phi | 'Q{' name '}' var phi | 'Qd{' name '}' var phi
//!        | 'I' var phi
//!        | '=(' vars ')' | 'inc(' vars ';' vars ')' | 'exc(' vars ';' vars ')'
//!        | 'perp(' vars ';' vars ')' | 'perp(' vars ';' [vars] ';' vars ')'
//!        | 'iatom{' name '}(' [vars] ';' var ')' | 'gatom{' name '}(' vars (';' vars)* ')'
//! lit  ::= ['~'] name '(' vars ')' | ['~'] var '=' var
//! ```
//!
//! In permissive mode `~` may prefix any formula and a single formula may be
//! parenthesized; the result then needs [`to_nnf`](super::to_nnf).

use super::nnf::RawFormula;
use super::{Atom, Formula, SyntaxError, Var, Vocabulary};
use crate::quantifiers::Registry;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Amp,
    Bar,
    Tilde,
    Eq,
    Colon,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '~' => Tok::Tilde,
            '=' => Tok::Eq,
            ':' => Tok::Colon,
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            other => {
                return Err(SyntaxError::Parse {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

/// Formula parser bound to a vocabulary and quantifier registry.
pub struct Parser<'a> {
    vocab: &'a Vocabulary,
    registry: &'a Registry,
    permissive: bool,
}

impl<'a> Parser<'a> {
    pub fn new(vocab: &'a Vocabulary, registry: &'a Registry) -> Parser<'a> {
        Parser {
            vocab,
            registry,
            permissive: false,
        }
    }

    pub fn permissive(mut self, on: bool) -> Parser<'a> {
        self.permissive = on;
        self
    }

    pub fn parse_raw(&self, text: &str) -> Result<RawFormula, SyntaxError> {
        let toks = lex(text)?;
        let mut st = State {
            toks,
            pos: 0,
            end: text.len(),
            p: self,
        };
        let f = st.phi()?;
        if st.pos != st.toks.len() {
            return Err(st.err("trailing input"));
        }
        Ok(f)
    }

    /// Parses a formula in negation normal form.
    pub fn parse(&self, text: &str) -> Result<Formula, SyntaxError> {
        self.parse_raw(text)?.into_strict()
    }
}

/// Parses a strict (negation normal form) formula against `vocab`, with the
/// built-in quantifier registry.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<Formula, SyntaxError> {
    Parser::new(vocab, &Registry::builtin()).parse(text)
}

/// Parses in permissive mode: negation anywhere.
pub fn parse_raw(
    text: &str,
    vocab: &Vocabulary,
    registry: &Registry,
) -> Result<RawFormula, SyntaxError> {
    Parser::new(vocab, registry).permissive(true).parse_raw(text)
}

struct State<'p, 'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    p: &'p Parser<'a>,
}

impl State<'_, '_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn err(&self, message: &str) -> SyntaxError {
        SyntaxError::Parse {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.1)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(&format!("expected {what}"))),
        }
    }

    fn var(&mut self) -> Result<Var, SyntaxError> {
        let at = self.offset();
        let name = self.ident("variable")?;
        if !Var::is_valid_name(&name) {
            return Err(SyntaxError::Parse {
                offset: at,
                message: format!("`{name}` is not a variable name"),
            });
        }
        Ok(Var::new(name))
    }

    fn vars(&mut self) -> Result<Vec<Var>, SyntaxError> {
        let mut out = vec![self.var()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.var()?);
        }
        Ok(out)
    }

    /// A possibly empty list, terminated by `;` or `)`.
    fn opt_vars(&mut self) -> Result<Vec<Var>, SyntaxError> {
        match self.peek() {
            Some(Tok::Semi) | Some(Tok::RParen) => Ok(Vec::new()),
            _ => self.vars(),
        }
    }

    fn braced_name(&mut self) -> Result<String, SyntaxError> {
        self.expect(Tok::LBrace, "`{`")?;
        let name = self.ident("quantifier name")?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(name)
    }

    fn quantifier_type(&self, name: &str) -> Result<Vec<usize>, SyntaxError> {
        self.p
            .registry
            .get(name)
            .map(|q| q.qtype().to_vec())
            .ok_or_else(|| SyntaxError::UnknownQuantifier(name.to_string()))
    }

    fn require_unary(&self, name: &str) -> Result<(), SyntaxError> {
        let qtype = self.quantifier_type(name)?;
        if qtype != [1] {
            return Err(SyntaxError::QuantifierType {
                name: name.to_string(),
                expected: qtype,
                found: vec![1],
            });
        }
        Ok(())
    }

    fn phi(&mut self) -> Result<RawFormula, SyntaxError> {
        let start = self.offset();
        match self.peek().cloned() {
            None => Err(self.err("unexpected end of input")),
            Some(Tok::Tilde) => {
                self.pos += 1;
                let inner_at = self.offset();
                let inner = self.phi()?;
                if !self.p.permissive {
                    match &inner {
                        RawFormula::Leaf(f) if f.is_literal() => {}
                        RawFormula::Leaf(_) => {
                            return Err(SyntaxError::NegatedTeamAtom { offset: start })
                        }
                        _ => {
                            return Err(SyntaxError::Parse {
                                offset: inner_at,
                                message: "negation is only allowed on literals".into(),
                            })
                        }
                    }
                }
                Ok(RawFormula::Not(Box::new(inner)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let left = self.phi()?;
                match self.bump() {
                    Some(Tok::Amp) => {
                        let right = self.phi()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(RawFormula::And(Box::new(left), Box::new(right)))
                    }
                    Some(Tok::Bar) => {
                        let right = self.phi()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(RawFormula::Or(Box::new(left), Box::new(right)))
                    }
                    Some(Tok::RParen) if self.p.permissive => Ok(left),
                    _ => {
                        self.pos -= 1;
                        Err(self.err("expected `&` or `|`"))
                    }
                }
            }
            Some(Tok::Eq) if self.peek2() == Some(&Tok::LParen) => {
                self.pos += 2;
                let xs = self.vars()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(RawFormula::Leaf(Formula::Dep(xs)))
            }
            Some(Tok::Ident(word)) => self.phi_ident(&word, start),
            Some(_) => Err(self.err("expected a formula")),
        }
    }

    fn phi_ident(&mut self, word: &str, start: usize) -> Result<RawFormula, SyntaxError> {
        let next = self.peek2().cloned();
        match (word, &next) {
            ("E" | "A" | "I", Some(Tok::Ident(_))) => {
                self.pos += 1;
                let x = self.var()?;
                let body = Box::new(self.phi()?);
                Ok(match word {
                    "E" => RawFormula::Exists(x, body),
                    "A" => RawFormula::Forall(x, body),
                    _ => RawFormula::IOp(x, body),
                })
            }
            ("Q" | "Qd", Some(Tok::LBrace)) => {
                self.pos += 1;
                let name = self.braced_name()?;
                self.require_unary(&name)?;
                let var = self.var()?;
                let body = Box::new(self.phi()?);
                Ok(RawFormula::GenQuant {
                    quantifier: name,
                    dual: word == "Qd",
                    var,
                    body,
                })
            }
            ("inc" | "exc" | "perp", Some(Tok::LParen)) => {
                self.pos += 2;
                let xs = self.vars()?;
                self.expect(Tok::Semi, "`;`")?;
                let f = if word == "perp" {
                    let middle = self.opt_vars()?;
                    if self.peek() == Some(&Tok::Semi) {
                        self.pos += 1;
                        let ys = self.vars()?;
                        Formula::Indep {
                            xs,
                            cond: middle,
                            ys,
                        }
                    } else if middle.is_empty() {
                        return Err(self.err("expected variables"));
                    } else {
                        Formula::Indep {
                            xs,
                            cond: Vec::new(),
                            ys: middle,
                        }
                    }
                } else {
                    let ys = self.vars()?;
                    if xs.len() != ys.len() {
                        return Err(SyntaxError::Parse {
                            offset: start,
                            message: format!("`{word}` needs tuples of equal length"),
                        });
                    }
                    if word == "inc" {
                        Formula::Inclusion(xs, ys)
                    } else {
                        Formula::Exclusion(xs, ys)
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(RawFormula::Leaf(f))
            }
            ("iatom", Some(Tok::LBrace)) => {
                self.pos += 1;
                let name = self.braced_name()?;
                self.require_unary(&name)?;
                self.expect(Tok::LParen, "`(`")?;
                let ys = self.opt_vars()?;
                self.expect(Tok::Semi, "`;`")?;
                let x = self.var()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(RawFormula::Leaf(Formula::Induced {
                    quantifier: name,
                    ys,
                    x,
                }))
            }
            ("gatom", Some(Tok::LBrace)) => {
                self.pos += 1;
                let name = self.braced_name()?;
                self.expect(Tok::LParen, "`(`")?;
                let mut tuples = vec![self.vars()?];
                while self.peek() == Some(&Tok::Semi) {
                    self.pos += 1;
                    tuples.push(self.vars()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                let expected = self.quantifier_type(&name)?;
                let found: Vec<usize> = tuples.iter().map(Vec::len).collect();
                if expected != found {
                    return Err(SyntaxError::QuantifierType {
                        name,
                        expected,
                        found,
                    });
                }
                Ok(RawFormula::Leaf(Formula::General {
                    quantifier: name,
                    tuples,
                }))
            }
            (_, Some(Tok::LParen)) => {
                self.pos += 2;
                let args = self.vars()?;
                self.expect(Tok::RParen, "`)`")?;
                let arity = self
                    .p
                    .vocab
                    .arity(word)
                    .ok_or_else(|| SyntaxError::UndeclaredSymbol(word.to_string()))?;
                if arity != args.len() {
                    return Err(SyntaxError::ArityMismatch {
                        symbol: word.to_string(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                Ok(RawFormula::Leaf(Formula::Literal {
                    positive: true,
                    atom: Atom::Rel {
                        symbol: word.to_string(),
                        args,
                    },
                }))
            }
            (_, Some(Tok::Eq)) => {
                let a = self.var()?;
                self.pos += 1;
                let b = self.var()?;
                Ok(RawFormula::Leaf(Formula::Literal {
                    positive: true,
                    atom: Atom::Eq(a, b),
                }))
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::parse("P/1,E/2,R/2,Y/1").unwrap()
    }

    fn parse(text: &str) -> Result<Formula, SyntaxError> {
        parse_formula(text, &vocab())
    }

    #[test]
    fn dependence_atom() {
        assert_eq!(
            parse("=(x,y)").unwrap(),
            Formula::Dep(vec!["x".into(), "y".into()])
        );
    }

    #[test]
    fn conditional_and_pure_independence() {
        assert_eq!(
            parse("perp(x ; z ; y)").unwrap(),
            Formula::Indep {
                xs: vec!["x".into()],
                cond: vec!["z".into()],
                ys: vec!["y".into()],
            }
        );
        let pure = Formula::Indep {
            xs: vec!["x".into()],
            cond: vec![],
            ys: vec!["y".into()],
        };
        assert_eq!(parse("perp(x ;; y)").unwrap(), pure);
        assert_eq!(parse("perp(x;y)").unwrap(), pure);
    }

    #[test]
    fn negated_team_atom_is_rejected() {
        assert_eq!(
            parse("~ =(x)"),
            Err(SyntaxError::NegatedTeamAtom { offset: 0 })
        );
        assert!(matches!(
            parse("(P(x) & ~inc(x;y))"),
            Err(SyntaxError::NegatedTeamAtom { .. })
        ));
    }

    #[test]
    fn negation_only_on_literals_in_strict_mode() {
        assert!(parse("~E x P(x)").is_err());
        assert!(parse("~~P(x)").is_err());
        assert!(parse("~P(x)").is_ok());
        assert!(parse("~x=y").is_ok());
    }

    #[test]
    fn relation_named_like_a_keyword() {
        let f = parse("E x E(x,x)").unwrap();
        assert_eq!(f, Formula::exists("x", Formula::rel("E", &["x", "x"])));
        let g = parse("A y E x (E(x,y) | x=y)").unwrap();
        assert_eq!(g.to_string(), "A y E x (E(x,y) | x=y)");
    }

    #[test]
    fn declared_symbols_and_arity() {
        assert_eq!(
            parse("S(x)"),
            Err(SyntaxError::UndeclaredSymbol("S".into()))
        );
        assert!(matches!(parse("P(x,y)"), Err(SyntaxError::ArityMismatch { .. })));
        assert!(matches!(
            parse("Q{nosuch} x P(x)"),
            Err(SyntaxError::UnknownQuantifier(_))
        ));
    }

    #[test]
    fn generalized_forms() {
        let f = parse("Qd{majority} x iatom{majority_prime}(y,z;x)").unwrap();
        assert_eq!(f.to_string(), "Qd{majority} x iatom{majority_prime}(y,z;x)");
        assert!(parse("gatom{D2}(x,y)").is_ok());
        assert!(matches!(
            parse("gatom{D2}(x)"),
            Err(SyntaxError::QuantifierType { .. })
        ));
        assert!(parse("Q{D2} x P(x)").is_err());
        assert!(parse("iatom{exists}(;x)").is_ok());
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("(P(x) & P(y)") {
            Err(SyntaxError::Parse { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("(P(x))").is_err());
        assert!(parse("inc(x,y;z)").is_err());
        assert!(parse("P(X)").is_err());
        assert!(parse("P(x) P(y)").is_err());
    }

    #[test]
    fn permissive_mode_accepts_parentheses_and_negation() {
        let raw = parse_raw("~(~P(x))", &vocab(), &Registry::builtin()).unwrap();
        assert!(matches!(raw, RawFormula::Not(_)));
    }
}
