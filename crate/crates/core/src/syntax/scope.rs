use std::collections::BTreeMap;

use super::{Formula, Var};

/// Path of child indices from the root; the root is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Position {
        let mut path = self.0.clone();
        path.push(i);
        Position(path)
    }

    /// The subformula of `root` at this position.
    pub fn resolve<'a>(&self, root: &'a Formula) -> Option<&'a Formula> {
        let mut node = root;
        for &i in &self.0 {
            node = *node.children().get(i)?;
        }
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScopeEntry {
    /// Variables whose binders strictly enclose the position, outermost
    /// first, without duplicates.
    pub superordinate: Vec<Var>,
    /// Some strict ancestor is a disjunction.
    pub under_disjunction: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScopeInfo {
    pub entries: BTreeMap<Position, ScopeEntry>,
}

impl ScopeInfo {
    pub fn get(&self, pos: &Position) -> Option<&ScopeEntry> {
        self.entries.get(pos)
    }
}

pub fn scope_info(formula: &Formula) -> ScopeInfo {
    let mut info = ScopeInfo::default();
    walk(formula, Position::root(), &ScopeEntry::default(), &mut info);
    info
}

fn walk(f: &Formula, pos: Position, entry: &ScopeEntry, info: &mut ScopeInfo) {
    let mut below = entry.clone();
    if let Some(x) = f.binder() {
        if !below.superordinate.contains(x) {
            below.superordinate.push(x.clone());
        }
    }
    if matches!(f, Formula::Or(..)) {
        below.under_disjunction = true;
    }
    for (i, child) in f.children().into_iter().enumerate() {
        walk(child, pos.child(i), &below, info);
    }
    info.entries.insert(pos, entry.clone());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, Vocabulary};

    fn parse(text: &str) -> Formula {
        parse_formula(text, &Vocabulary::parse("P/1,R/2").unwrap()).unwrap()
    }

    #[test]
    fn superordinate_variables() {
        let f = parse("A x E z R(x,z)");
        let info = scope_info(&f);
        let e = info.get(&Position(vec![0, 0])).unwrap();
        assert_eq!(e.superordinate, vec![Var::from("x"), Var::from("z")]);
        assert!(!e.under_disjunction);
        assert!(info.get(&Position::root()).unwrap().superordinate.is_empty());
    }

    #[test]
    fn disjunction_flag() {
        let f = parse("(P(x) | E z R(x,z))");
        let info = scope_info(&f);
        let e = info.get(&Position(vec![1, 0])).unwrap();
        assert!(e.under_disjunction);
        assert_eq!(e.superordinate, vec![Var::from("z")]);
        assert!(info.get(&Position(vec![1])).unwrap().under_disjunction);
    }

    #[test]
    fn top_level_existential() {
        let info = scope_info(&parse("E x P(x)"));
        let e = info.get(&Position(vec![0])).unwrap();
        assert_eq!(e.superordinate, vec![Var::from("x")]);
        assert!(!e.under_disjunction);
    }
}
