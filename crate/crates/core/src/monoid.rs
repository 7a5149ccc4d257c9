//! Finite abelian idempotent monoids (join-semilattices with a least element).
//!
//! Elements carry opaque string labels and are addressed internally by dense
//! indices; the join is an index matrix.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense element index into a [`Monoid`].
pub type Elem = usize;

/// Default cap on the number of elements.
pub const MAX_ELEMENTS: usize = 4096;

/// Largest generator count accepted by [`free_semilattice`].
pub const MAX_GENERATORS: usize = 16;

/// One failed axiom together with the labels that witness it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    NotCommutative { x: String, y: String },
    NotAssociative { x: String, y: String, z: String },
    NotIdempotent { x: String },
    BadNeutral { x: String },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::NotCommutative { x, y } => {
                write!(f, "not commutative: {x}∇{y} ≠ {y}∇{x}")
            }
            AxiomViolation::NotAssociative { x, y, z } => {
                write!(f, "not associative at ({x}, {y}, {z})")
            }
            AxiomViolation::NotIdempotent { x } => write!(f, "not idempotent: {x}∇{x} ≠ {x}"),
            AxiomViolation::BadNeutral { x } => write!(f, "neutral element fails at {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MonoidError {
    #[error("a monoid needs at least one element")]
    Empty,
    #[error("duplicate element label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("join table must be {expected}x{expected}")]
    TableShape { expected: usize },
    #[error("{size} elements exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("at most {MAX_GENERATORS} generators are supported, got {0}")]
    TooManyGenerators(usize),
    #[error("axioms violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<AxiomViolation>),
}

/// Unvalidated monoid description: labels, neutral label, join table of labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMonoid {
    pub elements: Vec<String>,
    pub neutral: String,
    pub join: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monoid {
    labels: Vec<String>,
    index: HashMap<String, Elem>,
    neutral: Elem,
    table: Vec<Elem>,
}

/// Validates `raw` against the four axioms with the default size cap.
pub fn validate_monoid(raw: &RawMonoid) -> Result<Monoid, MonoidError> {
    validate_monoid_with_cap(raw, MAX_ELEMENTS)
}

pub fn validate_monoid_with_cap(raw: &RawMonoid, cap: usize) -> Result<Monoid, MonoidError> {
    let n = raw.elements.len();
    if n == 0 {
        return Err(MonoidError::Empty);
    }
    if n > cap {
        return Err(MonoidError::TooLarge { size: n, cap });
    }
    let index = label_index(&raw.elements)?;
    let lookup = |l: &String| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| MonoidError::UnknownElement(l.clone()))
    };
    let neutral = lookup(&raw.neutral)?;
    if raw.join.len() != n || raw.join.iter().any(|row| row.len() != n) {
        return Err(MonoidError::TableShape { expected: n });
    }
    let mut table = Vec::with_capacity(n * n);
    for row in &raw.join {
        for cell in row {
            table.push(lookup(cell)?);
        }
    }
    Monoid::from_table(raw.elements.clone(), neutral, table)
}

fn label_index(labels: &[String]) -> Result<HashMap<String, Elem>, MonoidError> {
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(MonoidError::DuplicateLabel(l.clone()));
        }
    }
    Ok(index)
}

impl Monoid {
    /// Builds a monoid from an index table (`table[x * n + y] = x ∇ y`),
    /// checking every axiom exhaustively.
    pub fn from_table(labels: Vec<String>, neutral: Elem, table: Vec<Elem>) -> Result<Monoid, MonoidError> {
        let n = labels.len();
        if n == 0 {
            return Err(MonoidError::Empty);
        }
        if table.len() != n * n || neutral >= n {
            return Err(MonoidError::TableShape { expected: n });
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= n) {
            return Err(MonoidError::UnknownElement(format!("#{bad}")));
        }
        let index = label_index(&labels)?;
        let m = Monoid { labels, index, neutral, table };
        let violations = m.axiom_violations();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(MonoidError::Invalid(violations))
        }
    }

    /// First witness for each violated axiom; empty when all four hold.
    pub fn axiom_violations(&self) -> Vec<AxiomViolation> {
        let n = self.len();
        let l = |i: Elem| self.labels[i].clone();
        let mut out = Vec::new();
        if let Some((x, y)) = pairs(n).find(|&(x, y)| self.join(x, y) != self.join(y, x)) {
            out.push(AxiomViolation::NotCommutative { x: l(x), y: l(y) });
        }
        'assoc: for x in 0..n {
            for y in 0..n {
                let xy = self.join(x, y);
                for z in 0..n {
                    if self.join(x, self.join(y, z)) != self.join(xy, z) {
                        out.push(AxiomViolation::NotAssociative { x: l(x), y: l(y), z: l(z) });
                        break 'assoc;
                    }
                }
            }
        }
        if let Some(x) = (0..n).find(|&x| self.join(x, x) != x) {
            out.push(AxiomViolation::NotIdempotent { x: l(x) });
        }
        if let Some(x) = (0..n).find(|&x| self.join(x, self.neutral) != x || self.join(self.neutral, x) != x) {
            out.push(AxiomViolation::BadNeutral { x: l(x) });
        }
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.len()
    }

    pub fn neutral(&self) -> Elem {
        self.neutral
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: Elem) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<Elem, MonoidError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| MonoidError::UnknownElement(label.to_string()))
    }

    #[inline]
    pub fn join(&self, x: Elem, y: Elem) -> Elem {
        self.table[x * self.labels.len() + y]
    }

    pub fn join_all<I: IntoIterator<Item = Elem>>(&self, items: I) -> Elem {
        items.into_iter().fold(self.neutral, |acc, x| self.join(acc, x))
    }

    /// `x ≤ y` iff `x ∇ y = y`.
    #[inline]
    pub fn leq(&self, x: Elem, y: Elem) -> bool {
        self.join(x, y) == y
    }

    /// Label-level [`Monoid::leq`].
    pub fn leq_labels(&self, x: &str, y: &str) -> Result<bool, MonoidError> {
        Ok(self.leq(self.index_of(x)?, self.index_of(y)?))
    }

    /// Join of every element; a finite join-semilattice always has one.
    pub fn top(&self) -> Elem {
        self.join_all(self.elements())
    }

    pub fn order(&self) -> OrderRelation {
        let n = self.len();
        let leq = pairs(n).map(|(x, y)| self.leq(x, y)).collect();
        OrderRelation { n, leq }
    }

    /// The raw join table (row-major).
    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    pub fn to_raw(&self) -> RawMonoid {
        RawMonoid {
            elements: self.labels.clone(),
            neutral: self.labels[self.neutral].clone(),
            join: self
                .elements()
                .map(|x| self.elements().map(|y| self.labels[self.join(x, y)].clone()).collect())
                .collect(),
        }
    }

    /// Largest set of elements in which no member lies below the join of
    /// the others. Bounds the number of parts an optimal join
    /// decomposition needs. Exponential; only for tiny monoids.
    pub fn max_irredundant(&self) -> usize {
        let n = self.len();
        assert!(n <= 20, "max_irredundant is exponential in the size");
        let candidates: Vec<Elem> = self.elements().filter(|&x| x != self.neutral).collect();
        let k = candidates.len();
        let mut best = 0;
        for mask in 1u32..(1u32 << k) {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let members: Vec<Elem> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| candidates[i]).collect();
            let irredundant = members.iter().enumerate().all(|(i, &x)| {
                let rest = self.join_all(members.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &y)| y));
                !self.leq(x, rest)
            });
            if irredundant {
                best = size;
            }
        }
        best
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (Elem, Elem)> {
    (0..n).flat_map(move |x| (0..n).map(move |y| (x, y)))
}

/// The partial order induced by the join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderRelation {
    n: usize,
    leq: Vec<bool>,
}

impl OrderRelation {
    pub fn leq(&self, x: Elem, y: Elem) -> bool {
        self.leq[x * self.n + y]
    }

    pub fn is_partial_order(&self) -> bool {
        let n = self.n;
        let reflexive = (0..n).all(|x| self.leq(x, x));
        let antisymmetric = pairs(n).all(|(x, y)| x == y || !(self.leq(x, y) && self.leq(y, x)));
        let transitive = pairs(n).all(|(x, y)| !self.leq(x, y) || (0..n).all(|z| !self.leq(y, z) || self.leq(x, z)));
        reflexive && antisymmetric && transitive
    }
}

/// Label for a subset of named generators, e.g. `{x,z}` or `{}`.
pub fn set_label<S: AsRef<str>>(names: &[S], mask: u64) -> String {
    let parts: Vec<&str> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, s)| s.as_ref())
        .collect();
    format!("{{{}}}", parts.join(","))
}

/// Builds the monoid of the given union-closed family of bitmasks; the family
/// must contain `0`. Elements keep the order of `masks`.
pub fn from_masks<S: AsRef<str>>(names: &[S], masks: &[u64]) -> Result<Monoid, MonoidError> {
    let pos: HashMap<u64, Elem> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let neutral = *pos.get(&0).ok_or_else(|| MonoidError::UnknownElement("{}".into()))?;
    let mut table = Vec::with_capacity(masks.len() * masks.len());
    for &a in masks {
        for &b in masks {
            let j = pos
                .get(&(a | b))
                .ok_or_else(|| MonoidError::UnknownElement(set_label(names, a | b)))?;
            table.push(*j);
        }
    }
    let labels = masks.iter().map(|&m| set_label(names, m)).collect();
    Monoid::from_table(labels, neutral, table)
}

/// Powerset of the named generators under union, indexed by bitmask.
pub fn powerset<S: AsRef<str>>(names: &[S]) -> Result<Monoid, MonoidError> {
    if names.len() > MAX_GENERATORS {
        return Err(MonoidError::TooManyGenerators(names.len()));
    }
    let masks: Vec<u64> = (0..1u64 << names.len()).collect();
    from_masks(names, &masks)
}

/// Powerset of `{1, …, n}` under union; element `i` is the subset with bitmask `i`.
pub fn free_semilattice(n: usize) -> Result<Monoid, MonoidError> {
    if n == 0 || n > MAX_GENERATORS {
        return Err(MonoidError::TooManyGenerators(n));
    }
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    powerset(&names)
}

/// Union-closed family of generator subsets containing `∅`, grown from random
/// subsets until it has at least `n_keep` members (clamped to `2^n`).
/// Returned sorted ascending by bitmask.
pub fn random_family(n_generators: usize, n_keep: usize, seed: u64) -> Vec<u64> {
    let n_generators = n_generators.clamp(1, MAX_GENERATORS);
    let full = 1u64 << n_generators;
    let target = n_keep.clamp(1, full as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family: BTreeSet<u64> = BTreeSet::from([0]);
    while family.len() < target {
        let pick = rng.gen_range(1..full);
        if family.contains(&pick) {
            continue;
        }
        let mut frontier = vec![pick];
        while let Some(m) = frontier.pop() {
            if family.insert(m) {
                frontier.extend(family.iter().map(|&o| o | m).filter(|u| !family.contains(u)));
            }
        }
    }
    family.into_iter().collect()
}

/// A random join-closed sub-monoid of the free semilattice on
/// `n_generators` generators with at least `n_keep` elements.
pub fn random_submonoid(n_generators: usize, n_keep: usize, seed: u64) -> Monoid {
    let n_generators = n_generators.clamp(1, MAX_GENERATORS);
    let names: Vec<String> = (1..=n_generators).map(|i| i.to_string()).collect();
    let family = random_family(n_generators, n_keep, seed);
    from_masks(&names, &family).expect("union-closed families are monoids")
}
