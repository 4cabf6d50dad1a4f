//! Assignments, teams and the team operations used by the semantic clauses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::structures::Element;
use crate::syntax::Var;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeamError {
    #[error("variable `{0}` is not in the team's domain")]
    UnknownVariable(Var),
    #[error("row has {found} values for {expected} variables")]
    RowLength { expected: usize, found: usize },
    #[error("empty value set for a row")]
    EmptyChoice,
    #[error("team syntax: {0}")]
    Parse(String),
}

/// A finite map from variables to elements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Assignment(pub BTreeMap<Var, Element>);

impl Assignment {
    pub fn empty() -> Assignment {
        Assignment::default()
    }

    pub fn get(&self, x: &Var) -> Option<Element> {
        self.0.get(x).copied()
    }

    /// `s[a/x]`
    pub fn update(&self, x: &Var, a: Element) -> Assignment {
        let mut s = self.clone();
        s.0.insert(x.clone(), a);
        s
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }
}

/// A set of assignments over a common variable domain. The domain is kept
/// explicitly so that the empty team still has one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Team {
    vars: Vec<Var>,
    rows: BTreeSet<Vec<Element>>,
}

impl Team {
    /// The empty team with domain `vars`.
    pub fn empty(vars: impl IntoIterator<Item = Var>) -> Team {
        let mut vars: Vec<Var> = vars.into_iter().collect();
        vars.sort();
        vars.dedup();
        Team {
            vars,
            rows: BTreeSet::new(),
        }
    }

    /// `{∅}`
    pub fn unit() -> Team {
        Team {
            vars: Vec::new(),
            rows: [Vec::new()].into(),
        }
    }

    /// Team over `vars` whose rows list values in the order of `vars`.
    pub fn from_rows(
        vars: &[Var],
        rows: impl IntoIterator<Item = Vec<Element>>,
    ) -> Result<Team, TeamError> {
        let mut team = Team::empty(vars.iter().cloned());
        let perm: Vec<usize> = team
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("same set"))
            .collect();
        for row in rows {
            if row.len() != vars.len() {
                return Err(TeamError::RowLength {
                    expected: vars.len(),
                    found: row.len(),
                });
            }
            team.rows.insert(perm.iter().map(|&i| row[i]).collect());
        }
        Ok(team)
    }

    pub fn from_assignments(
        vars: impl IntoIterator<Item = Var>,
        rows: impl IntoIterator<Item = Assignment>,
    ) -> Result<Team, TeamError> {
        let mut team = Team::empty(vars);
        for s in rows {
            let row = team
                .vars
                .iter()
                .map(|v| s.get(v).ok_or_else(|| TeamError::UnknownVariable(v.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            if s.0.len() != team.vars.len() {
                let extra = s.domain().find(|v| !team.vars.contains(v)).expect("extra var");
                return Err(TeamError::UnknownVariable(extra.clone()));
            }
            team.rows.insert(row);
        }
        Ok(team)
    }

    /// The variable domain in sorted order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows as value vectors aligned with [`Team::vars`].
    pub fn rows(&self) -> impl Iterator<Item = &Vec<Element>> {
        self.rows.iter()
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.rows
            .iter()
            .map(|r| Assignment(self.vars.iter().cloned().zip(r.iter().copied()).collect()))
    }

    fn index(&self, x: &Var) -> Result<usize, TeamError> {
        self.vars
            .binary_search(x)
            .map_err(|_| TeamError::UnknownVariable(x.clone()))
    }

    fn indices(&self, xs: &[Var]) -> Result<Vec<usize>, TeamError> {
        xs.iter().map(|x| self.index(x)).collect()
    }

    pub fn contains(&self, s: &Assignment) -> bool {
        let row: Option<Vec<Element>> = self.vars.iter().map(|v| s.get(v)).collect();
        row.is_some_and(|r| s.0.len() == self.vars.len() && self.rows.contains(&r))
    }

    /// `U[f/x]`: every row `s` is replaced by `s[a/x]` for each `a ∈ f(s)`.
    /// With `require_nonempty`, an empty `f(s)` is an error.
    pub fn extend_with(
        &self,
        x: &Var,
        mut f: impl FnMut(&Assignment) -> BTreeSet<Element>,
        require_nonempty: bool,
    ) -> Result<Team, TeamError> {
        let mut vars = self.vars.clone();
        vars.push(x.clone());
        let mut out = Team::empty(vars);
        for s in self.assignments() {
            let values = f(&s);
            if require_nonempty && values.is_empty() {
                return Err(TeamError::EmptyChoice);
            }
            for a in values {
                let t = s.update(x, a);
                out.rows
                    .insert(out.vars.iter().map(|v| t.get(v).expect("total")).collect());
            }
        }
        Ok(out)
    }

    /// `U[T/x]`
    pub fn extend_const(&self, x: &Var, set: &BTreeSet<Element>) -> Team {
        self.extend_with(x, |_| set.clone(), false)
            .expect("constant choice never fails without the nonempty check")
    }

    /// `Rel(U, xs)`. The empty team projects to the empty set on any tuple.
    pub fn rel_projection(&self, xs: &[Var]) -> Result<BTreeSet<Vec<Element>>, TeamError> {
        if self.rows.is_empty() {
            return Ok(BTreeSet::new());
        }
        let idx = self.indices(xs)?;
        Ok(self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).collect())
            .collect())
    }

    /// Partition into maximal nonempty subteams that are constant on `ys`,
    /// ordered by the `ys`-values.
    pub fn group_by(&self, ys: &[Var]) -> Result<Vec<(Vec<Element>, Team)>, TeamError> {
        if self.rows.is_empty() {
            return Ok(Vec::new());
        }
        let idx = self.indices(ys)?;
        let mut groups: BTreeMap<Vec<Element>, Team> = BTreeMap::new();
        for r in &self.rows {
            let key: Vec<Element> = idx.iter().map(|&i| r[i]).collect();
            groups
                .entry(key)
                .or_insert_with(|| Team::empty(self.vars.iter().cloned()))
                .rows
                .insert(r.clone());
        }
        Ok(groups.into_iter().collect())
    }

    /// `U↾V`: the team of restricted assignments.
    pub fn restrict(&self, keep: &BTreeSet<Var>) -> Team {
        let idx: Vec<usize> = (0..self.vars.len())
            .filter(|&i| keep.contains(&self.vars[i]))
            .collect();
        Team {
            vars: idx.iter().map(|&i| self.vars[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
        }
    }

    /// Rows of `self` kept by `pred`.
    pub fn filter(&self, mut pred: impl FnMut(&Assignment) -> bool) -> Team {
        let mut out = Team::empty(self.vars.iter().cloned());
        for (s, r) in self.assignments().zip(self.rows.iter()) {
            if pred(&s) {
                out.rows.insert(r.clone());
            }
        }
        out
    }

    pub fn is_subteam_of(&self, other: &Team) -> bool {
        self.vars == other.vars && self.rows.is_subset(&other.rows)
    }

    /// Parses `team { vars: x y row: 0 1 row: 1 1 }`.
    pub fn parse(text: &str) -> Result<Team, TeamError> {
        let err = |m: &str| TeamError::Parse(m.to_string());
        let toks = crate::structures::tokens(text);
        let mut it = toks.iter().map(String::as_str).peekable();
        for want in ["team", "{", "vars", ":"] {
            if it.next() != Some(want) {
                return Err(err(&format!("expected `{want}`")));
            }
        }
        let mut vars = Vec::new();
        while let Some(&t) = it.peek() {
            if t == "row" || t == "}" {
                break;
            }
            if !Var::is_valid_name(t) {
                return Err(err(&format!("`{t}` is not a variable name")));
            }
            let v = Var::from(t);
            if vars.contains(&v) {
                return Err(err(&format!("variable `{t}` listed twice")));
            }
            vars.push(v);
            it.next();
        }
        let mut rows = Vec::new();
        loop {
            match it.next() {
                Some("}") => break,
                Some("row") => {}
                _ => return Err(err("expected `row` or `}`")),
            }
            if it.next() != Some(":") {
                return Err(err("expected `:` after `row`"));
            }
            let mut row = Vec::new();
            while let Some(&t) = it.peek() {
                if t == "row" || t == "}" {
                    break;
                }
                let i: u32 = t
                    .parse()
                    .map_err(|_| err(&format!("`{t}` is not an element index")))?;
                row.push(Element::Base(i));
                it.next();
            }
            rows.push(row);
        }
        if it.next().is_some() {
            return Err(err("trailing input"));
        }
        Team::from_rows(&vars, rows)
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("team { vars:")?;
        for v in &self.vars {
            write!(f, " {v}")?;
        }
        for r in &self.rows {
            f.write_str("\n  row:")?;
            for e in r {
                write!(f, " {e}")?;
            }
        }
        f.write_str(" }")
    }
}
