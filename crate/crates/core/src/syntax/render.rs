use std::fmt;

use super::{Atom, Formula, Var};

fn join(vars: &[Var]) -> String {
    vars.iter().map(Var::name).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { symbol, args } => write!(f, "{symbol}({})", join(args)),
            Atom::Eq(a, b) => write!(f, "{a}={b}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Literal { positive, atom } => {
                if !positive {
                    f.write_str("~")?;
                }
                write!(f, "{atom}")
            }
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Exists(x, body) => write!(f, "E {x} {body}"),
            Formula::Forall(x, body) => write!(f, "A {x} {body}"),
            Formula::IOp(x, body) => write!(f, "I {x} {body}"),
            Formula::GenQuant {
                quantifier,
                dual,
                var,
                body,
            } => {
                let head = if *dual { "Qd" } else { "Q" };
                write!(f, "{head}{{{quantifier}}} {var} {body}")
            }
            Formula::Dep(xs) => write!(f, "=({})", join(xs)),
            Formula::Inclusion(xs, ys) => write!(f, "inc({};{})", join(xs), join(ys)),
            Formula::Exclusion(xs, ys) => write!(f, "exc({};{})", join(xs), join(ys)),
            Formula::Indep { xs, cond, ys } => {
                write!(f, "perp({};{};{})", join(xs), join(cond), join(ys))
            }
            Formula::Induced { quantifier, ys, x } => {
                write!(f, "iatom{{{quantifier}}}({};{x})", join(ys))
            }
            Formula::General { quantifier, tuples } => {
                let parts: Vec<String> = tuples.iter().map(|t| join(t)).collect();
                write!(f, "gatom{{{quantifier}}}({})", parts.join(";"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_grammar_forms() {
        let f = Formula::exists(
            "x",
            Formula::and(
                Formula::Indep {
                    xs: vec!["x".into()],
                    cond: vec![],
                    ys: vec!["y".into()],
                },
                Formula::Inclusion(vec!["x".into()], vec!["y".into()]),
            ),
        );
        assert_eq!(f.to_string(), "E x (perp(x;;y) & inc(x;y))");

        let g = Formula::Induced {
            quantifier: "exists".into(),
            ys: vec![],
            x: "x".into(),
        };
        assert_eq!(g.to_string(), "iatom{exists}(;x)");
        assert_eq!(
            Formula::eq("u", "u'").negate_literal().unwrap().to_string(),
            "~u=u'"
        );
    }
}
