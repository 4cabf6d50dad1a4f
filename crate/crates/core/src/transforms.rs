//! Syntactic translations: `T_Y^y` from dependence logic over `τ ∪ {Y}` to
//! inclusion/exclusion/independence logic, the quantifier-to-atom
//! translation `(·)*`, and elimination of dependence atoms.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::quantifiers::{check_monotone, Registry};
use crate::syntax::{make_clean, Atom, Formula, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("parameter `{0}` is not fresh for the input")]
    ParamNotFresh(Var),
    #[error("translation parameters must be distinct variables")]
    ParamsNotDistinct,
    #[error("`{0}` is not a dependence logic construct")]
    NotDependenceLogic(String),
    #[error("`{symbol}` is used with {found} arguments but must be unary")]
    NotUnary { symbol: String, found: usize },
    #[error("team atom or I in first-order input: {0}")]
    TeamAtom(String),
    #[error("unknown quantifier `{0}`")]
    UnknownQuantifier(String),
    #[error("quantifier `{0}` is not monotone")]
    NotMonotone(String),
}

/// The fixed symbol and variables of the `T_Y^y` translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TyParams {
    pub symbol: String,
    pub y: Var,
    pub v: Var,
    pub u: Var,
    pub u_prime: Var,
}

impl Default for TyParams {
    fn default() -> TyParams {
        TyParams {
            symbol: "Y".into(),
            y: Var::from("y"),
            v: Var::from("v"),
            u: Var::from("u"),
            u_prime: Var::from("u'"),
        }
    }
}

impl TyParams {
    fn vars(&self) -> [&Var; 4] {
        [&self.y, &self.v, &self.u, &self.u_prime]
    }

    fn check(&self, chi: &Formula) -> Result<(), TransformError> {
        let distinct: BTreeSet<&Var> = self.vars().into_iter().collect();
        if distinct.len() != 4 {
            return Err(TransformError::ParamsNotDistinct);
        }
        let used = chi.all_vars();
        if let Some(p) = self.vars().into_iter().find(|p| used.contains(*p)) {
            return Err(TransformError::ParamNotFresh(p.clone()));
        }
        let mut bad = None;
        chi.visit(&mut |n| {
            if bad.is_some() {
                return;
            }
            if !matches!(
                n,
                Formula::Literal { .. }
                    | Formula::Dep(_)
                    | Formula::And(..)
                    | Formula::Or(..)
                    | Formula::Exists(..)
                    | Formula::Forall(..)
            ) {
                bad = Some(TransformError::NotDependenceLogic(n.to_string()));
            }
            if let Formula::Literal {
                atom: Atom::Rel { symbol, args },
                ..
            } = n
            {
                if *symbol == self.symbol && args.len() != 1 {
                    bad = Some(TransformError::NotUnary {
                        symbol: symbol.clone(),
                        found: args.len(),
                    });
                }
            }
        });
        bad.map_or(Ok(()), Err)
    }
}

/// `T_Y^y(chi)`.
pub fn translate_ty(chi: &Formula, params: &TyParams) -> Result<Formula, TransformError> {
    params.check(chi)?;
    Ok(ty(chi, params, &[], false))
}

fn indep(xs: Vec<Var>, cond: &[Var], ys: Vec<Var>) -> Formula {
    Formula::Indep {
        xs,
        cond: cond.to_vec(),
        ys,
    }
}

/// `sup`: variables quantified above the node, outermost first.
fn ty(f: &Formula, p: &TyParams, sup: &[Var], under_or: bool) -> Formula {
    match f {
        Formula::Literal { positive, atom } => match atom {
            Atom::Rel { symbol, args } if *symbol == p.symbol => {
                let x = vec![args[0].clone()];
                let y = vec![p.y.clone()];
                if *positive {
                    Formula::Inclusion(x, y)
                } else {
                    Formula::Exclusion(x, y)
                }
            }
            _ => f.clone(),
        },
        Formula::Dep(_) => f.clone(),
        Formula::And(a, b) => Formula::and(ty(a, p, sup, under_or), ty(b, p, sup, under_or)),
        Formula::Or(a, b) => {
            let left = Formula::and(ty(a, p, sup, true), Formula::eq(p.v.name(), p.u.name()));
            let right = Formula::and(
                ty(b, p, sup, true),
                Formula::eq(p.v.name(), p.u_prime.name()),
            );
            Formula::exists(
                p.v.clone(),
                Formula::and(
                    indep(vec![p.v.clone()], sup, vec![p.y.clone()]),
                    Formula::or(left, right),
                ),
            )
        }
        Formula::Exists(x, body) => {
            let cond: Vec<Var> = sup.iter().filter(|z| *z != x).cloned().collect();
            let ys = if under_or {
                vec![p.y.clone(), p.v.clone()]
            } else {
                vec![p.y.clone()]
            };
            let inner = ty(body, p, &push(sup, x), under_or);
            Formula::exists(
                x.clone(),
                Formula::and(indep(vec![x.clone()], &cond, ys), inner),
            )
        }
        Formula::Forall(x, body) => Formula::forall(x.clone(), ty(body, p, &push(sup, x), under_or)),
        _ => unreachable!("checked to be dependence logic"),
    }
}

fn push(sup: &[Var], x: &Var) -> Vec<Var> {
    let mut out = sup.to_vec();
    if !out.contains(x) {
        out.push(x.clone());
    }
    out
}

/// `∃u ∃u' (~u=u' ∧ =(u) ∧ =(u') ∧ T_Y^y(chi))`.
pub fn wrap_ty(chi: &Formula, params: &TyParams) -> Result<Formula, TransformError> {
    let t = translate_ty(chi, params)?;
    let (u, u2) = (&params.u, &params.u_prime);
    let body = Formula::and(
        Formula::Literal {
            positive: false,
            atom: Atom::Eq(u.clone(), u2.clone()),
        },
        Formula::and(
            Formula::Dep(vec![u.clone()]),
            Formula::and(Formula::Dep(vec![u2.clone()]), t),
        ),
    );
    Ok(Formula::exists(u.clone(), Formula::exists(u2.clone(), body)))
}

/// Result of [`star_translate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarTranslation {
    /// The input after renaming bound variables apart.
    pub clean: Formula,
    pub output: Formula,
    pub warnings: Vec<String>,
}

/// Domain sizes up to which quantifiers are checked for monotonicity.
pub const MONOTONE_CHECK_SIZE: usize = 4;

/// `(·)*`: replaces every quantifier `Q̂x φ` by
/// `∀x((A_Q̂(ȳ,x) ∧ φ*) ∨ A_Q̂'(ȳ,x))`.
pub fn star_translate(beta: &Formula, registry: &Registry) -> Result<StarTranslation, TransformError> {
    if !beta.is_fo_q() {
        return Err(TransformError::TeamAtom(beta.to_string()));
    }
    let clean = make_clean(beta);
    let mut checked = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut result = Ok(());
    clean.visit(&mut |n| {
        let name = match n {
            Formula::Exists(..) => "exists".to_string(),
            Formula::Forall(..) => "forall".to_string(),
            Formula::GenQuant {
                quantifier, dual, ..
            } => quantifier_name(quantifier, *dual),
            _ => return,
        };
        if result.is_err() || !checked.insert(name.clone()) {
            return;
        }
        result = match registry.get(&name) {
            None => Err(TransformError::UnknownQuantifier(name)),
            Some(q) if !q.is_unary() => Err(TransformError::UnknownQuantifier(name)),
            Some(q) => match check_monotone(&q, MONOTONE_CHECK_SIZE) {
                Ok(true) => {
                    warnings.push(format!(
                        "`{name}` is monotone on domains up to size {MONOTONE_CHECK_SIZE}; larger domains are not checked"
                    ));
                    Ok(())
                }
                _ => Err(TransformError::NotMonotone(name)),
            },
        };
    });
    result?;
    let free: Vec<Var> = clean.free_vars().into_iter().collect();
    let output = star(&clean, &[], &free);
    Ok(StarTranslation {
        clean,
        output,
        warnings,
    })
}

fn quantifier_name(q: &str, dual: bool) -> String {
    if dual {
        format!("{q}_dual")
    } else {
        q.to_string()
    }
}

fn star(f: &Formula, sup: &[Var], free: &[Var]) -> Formula {
    let (name, x, body) = match f {
        Formula::And(a, b) => return Formula::and(star(a, sup, free), star(b, sup, free)),
        Formula::Or(a, b) => return Formula::or(star(a, sup, free), star(b, sup, free)),
        Formula::Exists(x, body) => ("exists".to_string(), x, body),
        Formula::Forall(x, body) => ("forall".to_string(), x, body),
        Formula::GenQuant {
            quantifier,
            dual,
            var,
            body,
        } => (quantifier_name(quantifier, *dual), var, body),
        _ => return f.clone(),
    };
    let mut ys = sup.to_vec();
    for v in free {
        if !ys.contains(v) {
            ys.push(v.clone());
        }
    }
    let inner = star(body, &push(sup, x), free);
    let atom = |quantifier: String| Formula::Induced {
        quantifier,
        ys: ys.clone(),
        x: x.clone(),
    };
    Formula::forall(
        x.clone(),
        Formula::or(
            Formula::and(atom(name.clone()), inner),
            atom(format!("{name}_prime")),
        ),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElimOptions {
    /// Also rewrite `=(y)` to `perp(y;;y)`.
    pub unary: bool,
}

/// Replaces `=(x̄,y)` by `perp(y;x̄;y)`.
pub fn eliminate_dependence_atoms(phi: &Formula, opts: ElimOptions) -> Formula {
    let rec = |f: &Formula| eliminate_dependence_atoms(f, opts);
    match phi {
        Formula::Dep(xs) if xs.len() >= 2 || opts.unary => {
            let (y, ante) = xs.split_last().expect("nonempty");
            indep(vec![y.clone()], ante, vec![y.clone()])
        }
        Formula::And(a, b) => Formula::and(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::or(rec(a), rec(b)),
        Formula::Exists(x, body) => Formula::exists(x.clone(), rec(body)),
        Formula::Forall(x, body) => Formula::forall(x.clone(), rec(body)),
        Formula::IOp(x, body) => Formula::IOp(x.clone(), Box::new(rec(body))),
        Formula::GenQuant {
            quantifier,
            dual,
            var,
            body,
        } => Formula::GenQuant {
            quantifier: quantifier.clone(),
            dual: *dual,
            var: var.clone(),
            body: Box::new(rec(body)),
        },
        _ => phi.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, Vocabulary};

    fn f(text: &str) -> Formula {
        parse_formula(text, &Vocabulary::parse("P/1,E/2,Y/1").unwrap()).unwrap()
    }

    fn ty_str(text: &str) -> String {
        translate_ty(&f(text), &TyParams::default()).unwrap().to_string()
    }

    #[test]
    fn top_level_exists() {
        assert_eq!(ty_str("E x Y(x)"), f("E x (perp(x;;y) & inc(x;y))").to_string());
    }

    #[test]
    fn disjunction_under_forall() {
        assert_eq!(
            ty_str("A x (Y(x) | ~Y(x))"),
            f("A x E v (perp(v;x;y) & ((inc(x;y) & v=u) | (exc(x;y) & v=u')))").to_string()
        );
    }

    #[test]
    fn exists_under_disjunction_is_independent_of_v() {
        assert_eq!(
            ty_str("(P(z) | E x Y(x))").replace(' ', ""),
            "Ev(perp(v;;y)&((P(z)&v=u)|(Ex(perp(x;;y,v)&inc(x;y))&v=u')))"
        );
    }

    #[test]
    fn nested_rebinding_drops_x_from_condition() {
        let out = ty_str("A z E x E x Y(x)");
        assert!(out.contains("E x (perp(x;z;y) & E x (perp(x;z;y)"), "{out}");
    }

    #[test]
    fn parameters_must_be_fresh() {
        assert_eq!(
            translate_ty(&f("E y Y(y)"), &TyParams::default()),
            Err(TransformError::ParamNotFresh(Var::from("y")))
        );
        assert!(matches!(
            translate_ty(&f("E x inc(x;x)"), &TyParams::default()),
            Err(TransformError::NotDependenceLogic(_))
        ));
    }

    #[test]
    fn wrapper() {
        let out = wrap_ty(&f("E x Y(x)"), &TyParams::default()).unwrap();
        assert_eq!(
            out,
            f("E u E u' (~u=u' & (=(u) & (=(u') & E x (perp(x;;y) & inc(x;y)))))")
        );
        assert_eq!(out.free_vars(), [Var::from("y")].into());
    }

    #[test]
    fn star_examples() {
        let reg = Registry::builtin();
        let out = star_translate(&f("E x P(x)"), &reg).unwrap().output;
        assert_eq!(
            out,
            f("A x ((iatom{exists}(;x) & P(x)) | iatom{exists_prime}(;x))")
        );
        let out = star_translate(&f("Q{majority} x P(x)"), &reg).unwrap().output;
        assert_eq!(
            out,
            f("A x ((iatom{majority}(;x) & P(x)) | iatom{majority_prime}(;x))")
        );
    }

    #[test]
    fn star_uses_superordinate_and_free_variables() {
        let reg = Registry::builtin();
        let out = star_translate(&f("A z E x E(x,w)"), &reg).unwrap().output;
        let s = out.to_string();
        assert!(s.contains("iatom{exists}(z,w;x)"), "{s}");
        assert!(s.contains("iatom{forall}(w;z)"), "{s}");
        assert_eq!(out.count(|n| matches!(n, Formula::Exists(..) | Formula::GenQuant { .. })), 0);
    }

    #[test]
    fn star_rejects_non_monotone() {
        let reg = Registry::builtin();
        assert_eq!(
            star_translate(&f("Q{exactly_1} x P(x)"), &reg),
            Err(TransformError::NotMonotone("exactly_1".into()))
        );
        assert!(matches!(
            star_translate(&f("E x =(x)"), &reg),
            Err(TransformError::TeamAtom(_))
        ));
    }

    #[test]
    fn dependence_elimination() {
        let e = |t: &str| eliminate_dependence_atoms(&f(t), ElimOptions::default());
        assert_eq!(e("=(x,y)"), f("perp(y;x;y)"));
        assert_eq!(e("P(x)"), f("P(x)"));
        assert_eq!(e("E x =(z,x)"), f("E x perp(x;z;x)"));
        assert_eq!(e("=(x)"), f("=(x)"));
        let unary = ElimOptions { unary: true };
        assert_eq!(eliminate_dependence_atoms(&f("=(x)"), unary), f("perp(x;;x)"));
    }
}
