//! Pre-NNF formulas and their conversion to negation normal form.

use std::collections::BTreeSet;

use super::{fresh_var, Atom, Formula, SyntaxError, Var};

/// A formula that may carry negation anywhere. Leaves are positive literals
/// or team atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawFormula {
    Leaf(Formula),
    Not(Box<RawFormula>),
    And(Box<RawFormula>, Box<RawFormula>),
    Or(Box<RawFormula>, Box<RawFormula>),
    Exists(Var, Box<RawFormula>),
    Forall(Var, Box<RawFormula>),
    GenQuant {
        quantifier: String,
        dual: bool,
        var: Var,
        body: Box<RawFormula>,
    },
    IOp(Var, Box<RawFormula>),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NnfOptions {
    /// Rewrite `~=(..)` to `E x ~x=x` instead of rejecting it.
    pub rewrite_negated_dependence: bool,
}

impl RawFormula {
    fn all_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            RawFormula::Leaf(f) => out.extend(f.all_vars()),
            RawFormula::Not(a) => a.all_vars(out),
            RawFormula::And(a, b) | RawFormula::Or(a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            RawFormula::Exists(x, a) | RawFormula::Forall(x, a) | RawFormula::IOp(x, a) => {
                out.insert(x.clone());
                a.all_vars(out);
            }
            RawFormula::GenQuant { var, body, .. } => {
                out.insert(var.clone());
                body.all_vars(out);
            }
        }
    }

    /// Converts to a [`Formula`] when no negation sits above a non-literal.
    pub fn into_strict(self) -> Result<Formula, SyntaxError> {
        to_nnf_inner(self, false, &NnfOptions::default(), &mut BTreeSet::new(), true)
    }
}

/// Pushes negations to the literals: De Morgan, quantifier duality
/// (`~E = A ~`, `~Q = Qd ~`) and double-negation elimination.
pub fn to_nnf(raw: RawFormula, opts: NnfOptions) -> Result<Formula, SyntaxError> {
    let mut used = BTreeSet::new();
    raw.all_vars(&mut used);
    to_nnf_inner(raw, false, &opts, &mut used, false)
}

fn to_nnf_inner(
    raw: RawFormula,
    negated: bool,
    opts: &NnfOptions,
    used: &mut BTreeSet<Var>,
    strict: bool,
) -> Result<Formula, SyntaxError> {
    let rec = |f: Box<RawFormula>, neg: bool, used: &mut BTreeSet<Var>| {
        to_nnf_inner(*f, neg, opts, used, strict)
    };
    Ok(match raw {
        RawFormula::Leaf(leaf) => {
            if !negated {
                leaf
            } else if let Some(neg) = leaf.negate_literal() {
                neg
            } else if matches!(leaf, Formula::Dep(_)) && opts.rewrite_negated_dependence {
                // Negated dependence atoms hold exactly on the empty team.
                let x = fresh_var(&Var::from("x"), used);
                used.insert(x.clone());
                Formula::exists(
                    x.clone(),
                    Formula::Literal {
                        positive: false,
                        atom: Atom::Eq(x.clone(), x),
                    },
                )
            } else {
                return Err(SyntaxError::TeamAtomUnderNegation(leaf.to_string()));
            }
        }
        RawFormula::Not(inner) => {
            if strict && !matches!(*inner, RawFormula::Leaf(ref l) if l.is_literal()) {
                return Err(SyntaxError::Parse {
                    offset: 0,
                    message: "negation is only allowed on literals".into(),
                });
            }
            rec(inner, !negated, used)?
        }
        RawFormula::And(a, b) => {
            let (a, b) = (rec(a, negated, used)?, rec(b, negated, used)?);
            if negated {
                Formula::or(a, b)
            } else {
                Formula::and(a, b)
            }
        }
        RawFormula::Or(a, b) => {
            let (a, b) = (rec(a, negated, used)?, rec(b, negated, used)?);
            if negated {
                Formula::and(a, b)
            } else {
                Formula::or(a, b)
            }
        }
        RawFormula::Exists(x, body) => {
            let body = rec(body, negated, used)?;
            if negated {
                Formula::forall(x, body)
            } else {
                Formula::exists(x, body)
            }
        }
        RawFormula::Forall(x, body) => {
            let body = rec(body, negated, used)?;
            if negated {
                Formula::exists(x, body)
            } else {
                Formula::forall(x, body)
            }
        }
        RawFormula::GenQuant {
            quantifier,
            dual,
            var,
            body,
        } => Formula::GenQuant {
            quantifier,
            dual: dual != negated,
            var,
            body: Box::new(rec(body, negated, used)?),
        },
        RawFormula::IOp(x, body) => {
            if negated {
                return Err(SyntaxError::IUnderNegation);
            }
            Formula::IOp(x, Box::new(rec(body, false, used)?))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantifiers::Registry;
    use crate::syntax::{parse_raw, Vocabulary};

    fn nnf(text: &str) -> Result<String, SyntaxError> {
        let vocab = Vocabulary::parse("P/1,E/2").unwrap();
        let raw = parse_raw(text, &vocab, &Registry::builtin())?;
        to_nnf(raw, NnfOptions::default()).map(|f| f.to_string())
    }

    #[test]
    fn negated_exists_becomes_forall() {
        assert_eq!(nnf("~E x P(x)").unwrap(), "A x ~P(x)");
    }

    #[test]
    fn negated_generalized_quantifier_dualizes() {
        assert_eq!(nnf("~Q{majority} x P(x)").unwrap(), "Qd{majority} x ~P(x)");
        assert_eq!(nnf("~Qd{majority} x P(x)").unwrap(), "Q{majority} x ~P(x)");
    }

    #[test]
    fn double_negation() {
        assert_eq!(nnf("~~P(x)").unwrap(), "P(x)");
        assert_eq!(nnf("~(P(x) & ~x=y)").unwrap(), "(~P(x) | x=y)");
    }

    #[test]
    fn team_atoms_under_odd_negation_rejected() {
        assert!(matches!(
            nnf("~(P(x) | inc(x;y))"),
            Err(SyntaxError::TeamAtomUnderNegation(_))
        ));
        assert_eq!(nnf("~~=(x)").unwrap(), "=(x)");
    }

    #[test]
    fn negated_dependence_rewrite_is_opt_in() {
        let vocab = Vocabulary::parse("P/1").unwrap();
        let raw = parse_raw("~=(x,y)", &vocab, &Registry::builtin()).unwrap();
        assert!(to_nnf(raw.clone(), NnfOptions::default()).is_err());
        let opts = NnfOptions {
            rewrite_negated_dependence: true,
        };
        assert_eq!(to_nnf(raw, opts).unwrap().to_string(), "E x1 ~x1=x1");
    }
}
