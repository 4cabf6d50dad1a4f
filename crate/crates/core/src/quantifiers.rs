//! Generalized quantifiers: a registry of named membership predicates, the
//! prime and dual derivations, monotonicity checking, and the semantics of
//! generalized and induced atoms on teams.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::structures::{all_tuples, Element, Model, Tuple};
use crate::syntax::Var;
use crate::teams::{Team, TeamError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantifierError {
    #[error("unknown quantifier `{0}`")]
    Unknown(String),
    #[error("quantifier `{name}` has type {expected:?}, got relations of arities {found:?}")]
    TypeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("quantifier `{0}` is not of type (1)")]
    NotUnary(String),
    #[error("membership needs a nonempty domain")]
    EmptyDomain,
    #[error("tuple outside the domain")]
    OutsideDomain,
    #[error(transparent)]
    Team(#[from] TeamError),
    #[error("quantifier config: {0}")]
    Config(String),
}

type Predicate = Arc<dyn Fn(&[Element], &[BTreeSet<Tuple>]) -> bool + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Exists,
    Forall,
    /// `|B| · den > num · |A|`
    Proportion { num: usize, den: usize },
    AtLeast(usize),
    Exactly(usize),
    /// `D_k`: the last coordinate is a function of the others.
    Dependence(usize),
    Prime(Box<Quantifier>),
    Dual(Box<Quantifier>),
    Custom(Predicate),
}

#[derive(Clone)]
pub struct Quantifier {
    name: String,
    qtype: Vec<usize>,
    kind: Kind,
}

impl fmt::Debug for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quantifier({} : {:?})", self.name, self.qtype)
    }
}

impl PartialEq for Quantifier {
    fn eq(&self, other: &Quantifier) -> bool {
        self.name == other.name && self.qtype == other.qtype
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeriveMode {
    Prime,
    Dual,
}

fn len_of(rel: &BTreeSet<Tuple>) -> usize {
    rel.len()
}

impl Quantifier {
    fn unary(name: impl Into<String>, kind: Kind) -> Quantifier {
        Quantifier {
            name: name.into(),
            qtype: vec![1],
            kind,
        }
    }

    pub fn exists() -> Quantifier {
        Quantifier::unary("exists", Kind::Exists)
    }

    pub fn forall() -> Quantifier {
        Quantifier::unary("forall", Kind::Forall)
    }

    /// `|B| > |A|/2`
    pub fn majority() -> Quantifier {
        Quantifier::unary("majority", Kind::Proportion { num: 1, den: 2 })
    }

    pub fn at_least(k: usize) -> Quantifier {
        Quantifier::unary(format!("atleast_{k}"), Kind::AtLeast(k))
    }

    pub fn exactly(k: usize) -> Quantifier {
        Quantifier::unary(format!("exactly_{k}"), Kind::Exactly(k))
    }

    /// The dependence quantifier `D_k` of type `(k)`.
    pub fn dependence(k: usize) -> Quantifier {
        Quantifier {
            name: format!("D_{k}"),
            qtype: vec![k],
            kind: Kind::Dependence(k),
        }
    }

    /// A user-supplied membership predicate over `(domain, relations)`.
    pub fn custom(
        name: impl Into<String>,
        qtype: Vec<usize>,
        member: impl Fn(&[Element], &[BTreeSet<Tuple>]) -> bool + Send + Sync + 'static,
    ) -> Quantifier {
        Quantifier {
            name: name.into(),
            qtype,
            kind: Kind::Custom(Arc::new(member)),
        }
    }

    fn renamed(mut self, name: &str) -> Quantifier {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qtype(&self) -> &[usize] {
        &self.qtype
    }

    pub fn is_unary(&self) -> bool {
        self.qtype == [1]
    }

    /// `Some(k)` for the dependence quantifier `D_k`.
    pub fn dependence_arity(&self) -> Option<usize> {
        match self.kind {
            Kind::Dependence(k) => Some(k),
            _ => None,
        }
    }

    /// Membership without argument checks.
    fn member_unchecked(&self, domain: &[Element], rels: &[BTreeSet<Tuple>]) -> bool {
        let n = domain.len();
        match &self.kind {
            Kind::Exists => len_of(&rels[0]) > 0,
            Kind::Forall => len_of(&rels[0]) == n,
            Kind::Proportion { num, den } => len_of(&rels[0]) * den > num * n,
            Kind::AtLeast(k) => len_of(&rels[0]) >= *k,
            Kind::Exactly(k) => len_of(&rels[0]) == *k,
            Kind::Dependence(k) => {
                let mut seen: BTreeMap<&[Element], Element> = BTreeMap::new();
                rels[0]
                    .iter()
                    .all(|t| *seen.entry(&t[..k - 1]).or_insert(t[k - 1]) == t[k - 1])
            }
            Kind::Prime(q) | Kind::Dual(q) => {
                let complement: BTreeSet<Tuple> = domain
                    .iter()
                    .map(|a| vec![*a])
                    .filter(|t| !rels[0].contains(t))
                    .collect();
                let inner = q.member_unchecked(domain, &[complement]);
                if matches!(self.kind, Kind::Prime(_)) {
                    inner
                } else {
                    !inner
                }
            }
            Kind::Custom(p) => p(domain, rels),
        }
    }

    /// `(R_1, …, R_n) ∈ Q^A`.
    pub fn member(
        &self,
        domain: &[Element],
        rels: &[BTreeSet<Tuple>],
    ) -> Result<bool, QuantifierError> {
        if domain.is_empty() {
            return Err(QuantifierError::EmptyDomain);
        }
        let mismatch = || QuantifierError::TypeMismatch {
            name: self.name.clone(),
            expected: self.qtype.clone(),
            found: rels
                .iter()
                .map(|r| r.iter().next().map_or(0, Vec::len))
                .collect(),
        };
        if rels.len() != self.qtype.len() {
            return Err(mismatch());
        }
        for (rel, &arity) in rels.iter().zip(&self.qtype) {
            for t in rel {
                if t.len() != arity {
                    return Err(mismatch());
                }
                if t.iter().any(|e| !domain.contains(e)) {
                    return Err(QuantifierError::OutsideDomain);
                }
            }
        }
        Ok(self.member_unchecked(domain, rels))
    }

    /// `B ∈ Q^A` for a type (1) quantifier.
    pub fn member_set(
        &self,
        domain: &[Element],
        set: &BTreeSet<Element>,
    ) -> Result<bool, QuantifierError> {
        let rel = set.iter().map(|e| vec![*e]).collect();
        self.member(domain, &[rel])
    }

    /// `Q^A` for a type (1) quantifier, as bitmasks over positions in
    /// `domain` (bit `i` stands for `domain[i]`), in increasing mask order.
    pub fn unary_class(&self, domain: &[Element]) -> Result<Vec<u64>, QuantifierError> {
        if !self.is_unary() {
            return Err(QuantifierError::NotUnary(self.name.clone()));
        }
        if domain.is_empty() {
            return Err(QuantifierError::EmptyDomain);
        }
        assert!(domain.len() < 32, "domain too large for subset enumeration");
        Ok((0..1u64 << domain.len())
            .filter(|&mask| {
                let rel = (0..domain.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| vec![domain[i]])
                    .collect();
                self.member_unchecked(domain, &[rel])
            })
            .collect())
    }
}

/// `(R_1, …, R_n) ∈ Q^A`.
pub fn q_member(
    q: &Quantifier,
    domain: &[Element],
    rels: &[BTreeSet<Tuple>],
) -> Result<bool, QuantifierError> {
    q.member(domain, rels)
}

/// `Q'` (prime: `B ↦ Q(A∖B)`) or `Q^d` (dual: `B ↦ ¬Q(A∖B)`).
pub fn derive(q: &Quantifier, mode: DeriveMode) -> Result<Quantifier, QuantifierError> {
    if !q.is_unary() {
        return Err(QuantifierError::NotUnary(q.name.clone()));
    }
    Ok(match mode {
        DeriveMode::Prime => Quantifier::unary(
            format!("{}_prime", q.name),
            Kind::Prime(Box::new(q.clone())),
        ),
        DeriveMode::Dual => {
            Quantifier::unary(format!("{}_dual", q.name), Kind::Dual(Box::new(q.clone())))
        }
    })
}

/// Upward monotonicity on every domain of size `1..=max_size`: `A ⊆ B` and
/// `A ∈ Q^C` imply `B ∈ Q^C`. The check is exhaustive but bounded.
pub fn check_monotone(q: &Quantifier, max_size: usize) -> Result<bool, QuantifierError> {
    for n in 1..=max_size {
        let domain: Vec<Element> = (0..n as u32).map(Element::Base).collect();
        let class: BTreeSet<u64> = q.unary_class(&domain)?.into_iter().collect();
        for &a in &class {
            // Adding any single element must stay in the class.
            for i in 0..n {
                if !class.contains(&(a | 1 << i)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The induced atom: every maximal nonempty subteam that is constant on
/// `ys` has its `x`-projection in `Q^A`.
pub fn induced_atom_holds(
    q: &Quantifier,
    ys: &[Var],
    x: &Var,
    model: &Model,
    team: &Team,
) -> Result<bool, QuantifierError> {
    if !q.is_unary() {
        return Err(QuantifierError::NotUnary(q.name.clone()));
    }
    for (_, group) in team.group_by(ys)? {
        let rel = group.rel_projection(std::slice::from_ref(x))?;
        if !q.member(model.domain(), &[rel])? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The generalized atom: `(Rel(U, x̄_1), …, Rel(U, x̄_n)) ∈ Q^A`.
pub fn general_atom_holds(
    q: &Quantifier,
    tuples: &[Vec<Var>],
    model: &Model,
    team: &Team,
) -> Result<bool, QuantifierError> {
    let found: Vec<usize> = tuples.iter().map(Vec::len).collect();
    if found != q.qtype {
        return Err(QuantifierError::TypeMismatch {
            name: q.name.clone(),
            expected: q.qtype.clone(),
            found,
        });
    }
    let rels = tuples
        .iter()
        .map(|t| team.rel_projection(t))
        .collect::<Result<Vec<_>, _>>()?;
    q.member(model.domain(), &rels)
}

/// Named quantifiers. Besides explicit entries, names of the forms
/// `atleast_K`, `exactly_K` and `D_K` (also `DK`) resolve to built-ins, and a
/// `_prime` or `_dual` suffix derives from the quantifier named by the rest.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, Quantifier>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry::default()
    }

    /// `exists`, `forall` and `majority` plus the parametric families.
    pub fn builtin() -> Registry {
        let mut r = Registry::empty();
        for q in [Quantifier::exists(), Quantifier::forall(), Quantifier::majority()] {
            r.entries.insert(q.name.clone(), q);
        }
        r
    }

    pub fn insert(&mut self, q: Quantifier) {
        self.entries.insert(q.name.clone(), q);
    }

    /// Explicitly registered names.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<Quantifier> {
        if let Some(q) = self.entries.get(name) {
            return Some(q.clone());
        }
        for (suffix, mode) in [("_prime", DeriveMode::Prime), ("_dual", DeriveMode::Dual)] {
            if let Some(base) = name.strip_suffix(suffix) {
                let q = self.get(base)?;
                return derive(&q, mode).ok().map(|d| d.renamed(name));
            }
        }
        let param = |prefix: &str| -> Option<usize> {
            let k: usize = name.strip_prefix(prefix)?.parse().ok()?;
            (1..=64).contains(&k).then_some(k)
        };
        if let Some(k) = param("atleast_") {
            return Some(Quantifier::at_least(k));
        }
        if let Some(k) = param("exactly_") {
            return Some(Quantifier::exactly(k));
        }
        if let Some(k) = param("D_").or_else(|| param("D")) {
            return Some(Quantifier::dependence(k).renamed(name));
        }
        None
    }

    pub fn resolve(&self, name: &str) -> Result<Quantifier, QuantifierError> {
        self.get(name)
            .ok_or_else(|| QuantifierError::Unknown(name.to_string()))
    }

    /// Adds the entries of a TOML config:
    ///
    /// ```toml
    /// [[quantifier]]
    /// name = "most"
    /// builtin = "proportion"   # exists forall majority atleast exactly dependence proportion
    /// num = 1
    /// den = 2
    ///
    /// [[quantifier]]
    /// name = "few"
    /// of = "most"
    /// derive = "dual"          # prime | dual
    /// ```
    pub fn load_toml(&mut self, text: &str) -> Result<(), QuantifierError> {
        let cfg: ConfigFile =
            toml::from_str(text).map_err(|e| QuantifierError::Config(e.to_string()))?;
        for entry in cfg.quantifier {
            let q = self.build(&entry)?;
            if let Some(t) = &entry.qtype {
                if t != &q.qtype {
                    return Err(QuantifierError::Config(format!(
                        "`{}` declares type {t:?} but its definition has type {:?}",
                        entry.name, q.qtype
                    )));
                }
            }
            self.insert(q.renamed(&entry.name));
        }
        Ok(())
    }

    fn build(&self, e: &ConfigEntry) -> Result<Quantifier, QuantifierError> {
        let bad = |m: &str| QuantifierError::Config(format!("`{}`: {m}", e.name));
        let need_k = || e.k.filter(|&k| k >= 1).ok_or_else(|| bad("needs k >= 1"));
        match (&e.builtin, &e.of) {
            (Some(b), None) => Ok(match b.as_str() {
                "exists" => Quantifier::exists(),
                "forall" => Quantifier::forall(),
                "majority" => Quantifier::majority(),
                "atleast" => Quantifier::at_least(need_k()?),
                "exactly" => Quantifier::exactly(need_k()?),
                "dependence" => Quantifier::dependence(need_k()?),
                "proportion" => {
                    let (num, den) = e.num.zip(e.den).ok_or_else(|| bad("needs num and den"))?;
                    if den == 0 {
                        return Err(bad("den must be positive"));
                    }
                    Quantifier::unary(e.name.clone(), Kind::Proportion { num, den })
                }
                other => return Err(bad(&format!("unknown builtin `{other}`"))),
            }),
            (None, Some(of)) => {
                let base = self.resolve(of)?;
                let mode = match e.derive.as_deref() {
                    Some("prime") => DeriveMode::Prime,
                    Some("dual") => DeriveMode::Dual,
                    _ => return Err(bad("`derive` must be `prime` or `dual`")),
                };
                derive(&base, mode)
            }
            _ => Err(bad("give exactly one of `builtin` and `of`")),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    quantifier: Vec<ConfigEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigEntry {
    name: String,
    #[serde(rename = "type")]
    qtype: Option<Vec<usize>>,
    builtin: Option<String>,
    k: Option<usize>,
    num: Option<usize>,
    den: Option<usize>,
    of: Option<String>,
    derive: Option<String>,
}

/// All subsets of a domain of size `n` as bitmasks; helper for tests and
/// oracles.
pub fn domain(n: usize) -> Vec<Element> {
    (0..n as u32).map(Element::Base).collect()
}

/// Extensional equality of two quantifiers of type (1) on domains `1..=n`.
pub fn unary_equal_up_to(a: &Quantifier, b: &Quantifier, n: usize) -> Result<bool, QuantifierError> {
    for size in 1..=n {
        let d = domain(size);
        if a.unary_class(&d)? != b.unary_class(&d)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every `k`-ary relation over `domain`, for small exhaustive checks.
pub fn all_relations(domain: &[Element], k: usize) -> Vec<BTreeSet<Tuple>> {
    let tuples = all_tuples(domain, k);
    assert!(tuples.len() < 20, "relation space too large");
    (0..1u32 << tuples.len())
        .map(|mask| {
            (0..tuples.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| tuples[i].clone())
                .collect()
        })
        .collect()
}
