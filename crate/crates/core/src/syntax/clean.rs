use std::collections::BTreeSet;

use super::{fresh_var, Formula, Var};

/// Renames bound variables so that no variable is both free and bound and
/// every binder uses a distinct name. Binders are visited in pre-order, left
/// to right; the first binder of a name that is not free keeps it.
pub fn make_clean(formula: &Formula) -> Formula {
    let mut taken = formula.free_vars();
    let mut avoid = formula.all_vars();
    rename(formula, &mut Vec::new(), &mut taken, &mut avoid)
}

fn rename(
    f: &Formula,
    env: &mut Vec<(Var, Var)>,
    taken: &mut BTreeSet<Var>,
    avoid: &mut BTreeSet<Var>,
) -> Formula {
    if let Some(x) = f.binder() {
        let new = if taken.contains(x) {
            fresh_var(x, avoid)
        } else {
            x.clone()
        };
        taken.insert(new.clone());
        avoid.insert(new.clone());
        env.push((x.clone(), new.clone()));
        let body = rename(f.children()[0], env, taken, avoid);
        env.pop();
        let body = Box::new(body);
        return match f {
            Formula::Exists(..) => Formula::Exists(new, body),
            Formula::Forall(..) => Formula::Forall(new, body),
            Formula::IOp(..) => Formula::IOp(new, body),
            Formula::GenQuant {
                quantifier, dual, ..
            } => Formula::GenQuant {
                quantifier: quantifier.clone(),
                dual: *dual,
                var: new,
                body,
            },
            _ => unreachable!("binder without body"),
        };
    }
    match f {
        Formula::And(a, b) => {
            let a = rename(a, env, taken, avoid);
            Formula::and(a, rename(b, env, taken, avoid))
        }
        Formula::Or(a, b) => {
            let a = rename(a, env, taken, avoid);
            Formula::or(a, rename(b, env, taken, avoid))
        }
        leaf => {
            let lookup = |v: &Var| {
                env.iter()
                    .rev()
                    .find(|(old, _)| old == v)
                    .map(|(_, new)| new.clone())
                    .unwrap_or_else(|| v.clone())
            };
            leaf.map_vars(&lookup)
        }
    }
}

/// True when no variable is both free and bound and no name is bound twice.
pub fn is_clean(formula: &Formula) -> bool {
    let free = formula.free_vars();
    let mut seen = BTreeSet::new();
    let mut ok = true;
    formula.visit(&mut |node| {
        if let Some(x) = node.binder() {
            ok &= !free.contains(x) && seen.insert(x.clone());
        }
    });
    ok
}
