//! Join-preserving maps, hom-sets as idempotent monoids, operator lengths,
//! the product-inequality closure and the Banach–Mazur-like distance.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::closure::tiha;
use crate::length::{bar_values, DistanceKind, DistanceTable, LengthFn, Mode, TableKind};
use crate::monoid::{Elem, Monoid};
use crate::num::{min_r, Rational};

/// Default cap on the number of candidate maps `|T|^|S|` for enumeration.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HomError {
    #[error("map has {got} entries, source has {expected} elements")]
    WrongLength { expected: usize, got: usize },
    #[error("image {0} is not an element of the target")]
    OutOfRange(usize),
    #[error("not join-preserving at ({x}, {y})")]
    NotJoinPreserving { x: String, y: String },
    #[error("source/target mismatch")]
    Mismatch,
    #[error("{candidates} candidate maps exceed the enumeration limit {limit}")]
    TooLarge { candidates: u128, limit: u128 },
    #[error("category not closed: {0}")]
    NotClosed(String),
    #[error("hom length premise fails at {0:?}")]
    PremiseFails(Vec<String>),
    #[error("no convergence within {0} iterations")]
    NotConverged(usize),
    #[error("{0}")]
    Invalid(String),
}

/// A join-preserving map between two monoids.
#[derive(Debug, Clone)]
pub struct Hom {
    source: Arc<Monoid>,
    target: Arc<Monoid>,
    map: Vec<Elem>,
}

impl PartialEq for Hom {
    fn eq(&self, other: &Self) -> bool {
        self.map == other.map && self.source == other.source && self.target == other.target
    }
}

impl Eq for Hom {}

fn first_join_failure(source: &Monoid, target: &Monoid, map: &[Elem]) -> Option<(Elem, Elem)> {
    let n = source.len();
    (0..n)
        .flat_map(|x| (x..n).map(move |y| (x, y)))
        .find(|&(x, y)| map[source.join(x, y)] != target.join(map[x], map[y]))
}

pub fn validate_hom(source: &Arc<Monoid>, target: &Arc<Monoid>, map: Vec<Elem>) -> Result<Hom, HomError> {
    if map.len() != source.len() {
        return Err(HomError::WrongLength { expected: source.len(), got: map.len() });
    }
    if let Some(&bad) = map.iter().find(|&&v| v >= target.len()) {
        return Err(HomError::OutOfRange(bad));
    }
    if let Some((x, y)) = first_join_failure(source, target, &map) {
        return Err(HomError::NotJoinPreserving { x: source.label(x).into(), y: source.label(y).into() });
    }
    Ok(Hom { source: Arc::clone(source), target: Arc::clone(target), map })
}

/// Same as [`validate_hom`] with the map given by labels.
pub fn validate_hom_labels<S: AsRef<str>>(
    source: &Arc<Monoid>,
    target: &Arc<Monoid>,
    map: &[S],
) -> Result<Hom, HomError> {
    let map = map
        .iter()
        .map(|l| target.index_of(l.as_ref()).map_err(|e| HomError::Invalid(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    validate_hom(source, target, map)
}

impl Hom {
    pub fn identity(m: &Arc<Monoid>) -> Hom {
        Hom { source: Arc::clone(m), target: Arc::clone(m), map: m.elements().collect() }
    }

    /// `x ↦ a`; a hom because `a ∇ a = a`.
    pub fn constant(source: &Arc<Monoid>, target: &Arc<Monoid>, a: Elem) -> Hom {
        Hom { source: Arc::clone(source), target: Arc::clone(target), map: vec![a; source.len()] }
    }

    /// `T_a(x) = x ∇ a`.
    pub fn translation(m: &Arc<Monoid>, a: Elem) -> Hom {
        Hom { source: Arc::clone(m), target: Arc::clone(m), map: m.elements().map(|x| m.join(x, a)).collect() }
    }

    pub fn source(&self) -> &Arc<Monoid> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Monoid> {
        &self.target
    }

    pub fn map(&self) -> &[Elem] {
        &self.map
    }

    pub fn apply(&self, x: Elem) -> Elem {
        self.map[x]
    }

    /// Maps the neutral element to the neutral element.
    pub fn is_unital(&self) -> bool {
        self.map[self.source.neutral()] == self.target.neutral()
    }

    pub fn is_bijective(&self) -> bool {
        self.source.len() == self.target.len() && self.map.iter().collect::<HashSet<_>>().len() == self.map.len()
    }

    pub fn inverse(&self) -> Option<Hom> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0; self.map.len()];
        for (x, &y) in self.map.iter().enumerate() {
            inv[y] = x;
        }
        Some(Hom { source: Arc::clone(&self.target), target: Arc::clone(&self.source), map: inv })
    }
}

impl fmt::Display for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let images: Vec<&str> = self.map.iter().map(|&y| self.target.label(y)).collect();
        write!(f, "[{}]", images.join(","))
    }
}

/// `(U∇V)(x) = Ux ∇ Vx`.
pub fn hom_join(u: &Hom, v: &Hom) -> Result<Hom, HomError> {
    if u.source != v.source || u.target != v.target {
        return Err(HomError::Mismatch);
    }
    let map = u.map.iter().zip(&v.map).map(|(&a, &b)| u.target.join(a, b)).collect();
    validate_hom(&u.source, &u.target, map)
}

/// `u ∘ v`, applying `v` first.
pub fn compose(u: &Hom, v: &Hom) -> Result<Hom, HomError> {
    if v.target != u.source {
        return Err(HomError::Mismatch);
    }
    let map = v.map.iter().map(|&y| u.map[y]).collect();
    validate_hom(&v.source, &u.target, map)
}

/// Every join-preserving map from `s` to `t`, in lexicographic order of the
/// image tuple.
pub fn enumerate_homs(s: &Arc<Monoid>, t: &Arc<Monoid>, limit: u128) -> Result<Vec<Hom>, HomError> {
    let candidates = (t.len() as u128).checked_pow(s.len() as u32).unwrap_or(u128::MAX);
    if candidates > limit {
        return Err(HomError::TooLarge { candidates, limit });
    }
    let n = s.len();
    let mut out = Vec::new();
    let mut map = vec![0; n];
    fn consistent(s: &Monoid, t: &Monoid, map: &[Elem], z: Elem) -> bool {
        (0..=z).all(|a| {
            (0..=z).all(|b| {
                let j = s.join(a, b);
                j > z || (a != z && b != z && j != z) || map[j] == t.join(map[a], map[b])
            })
        })
    }
    fn go(s: &Arc<Monoid>, t: &Arc<Monoid>, z: usize, map: &mut Vec<Elem>, out: &mut Vec<Hom>) {
        if z == s.len() {
            out.push(Hom { source: Arc::clone(s), target: Arc::clone(t), map: map.clone() });
            return;
        }
        for y in t.elements() {
            map[z] = y;
            if consistent(s, t, map, z) {
                go(s, t, z + 1, map, out);
            }
        }
    }
    go(s, t, 0, &mut map, &mut out);
    Ok(out)
}

/// A nonnegative value or `+∞`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ext {
    Finite(Rational),
    Infinite,
}

impl Ext {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ext::Finite(r) => Some(r),
            Ext::Infinite => None,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(r) => write!(f, "{r}"),
            Ext::Infinite => f.write_str("inf"),
        }
    }
}

/// Least `M ≥ 0` with `d_Q(Ux,Uy) ≤ M·d_S(x,y)` for all pairs; `0/0` counts
/// as 0 and `positive/0` as `+∞`.
pub fn ell_prime(u: &Hom, ds: &DistanceTable, dq: &DistanceTable) -> Ext {
    let n = u.source.len();
    let mut best = Rational::zero();
    for x in 0..n {
        for y in x + 1..n {
            let num = dq.get(u.map[x], u.map[y]);
            if num.is_zero() {
                continue;
            }
            let den = ds.get(x, y);
            if den.is_zero() {
                return Ext::Infinite;
            }
            let r = num / den;
            if r > best {
                best = r;
            }
        }
    }
    Ext::Finite(best)
}

/// An object of a [`Category`]: a monoid with its own distance table.
#[derive(Debug, Clone)]
pub struct Object {
    pub name: String,
    pub monoid: Arc<Monoid>,
    pub distance: DistanceTable,
}

/// The morphisms between two objects, with their own monoid under `∇`.
#[derive(Debug, Clone)]
pub struct HomSet {
    pub source: usize,
    pub target: usize,
    pub homs: Vec<Hom>,
    /// Element `i` is `homs[i]`; labels are image tuples.
    pub monoid: Arc<Monoid>,
    /// Index of the constant map to the neutral element.
    pub epsilon: usize,
    lookup: HashMap<Vec<Elem>, usize>,
}

impl HomSet {
    fn new(source: usize, target: usize, mut homs: Vec<Hom>) -> Result<HomSet, HomError> {
        homs.sort_by(|a, b| a.map.cmp(&b.map));
        homs.dedup_by(|a, b| a.map == b.map);
        let lookup: HashMap<Vec<Elem>, usize> = homs.iter().enumerate().map(|(i, h)| (h.map.clone(), i)).collect();
        let what = |msg: &str| HomError::NotClosed(format!("hom({source},{target}): {msg}"));
        let first = homs.first().ok_or_else(|| what("empty"))?;
        let (s, t) = (Arc::clone(&first.source), Arc::clone(&first.target));
        let epsilon = *lookup.get(&vec![t.neutral(); s.len()]).ok_or_else(|| what("constant neutral map missing"))?;
        let k = homs.len();
        let mut table = Vec::with_capacity(k * k);
        for u in &homs {
            for v in &homs {
                let j = hom_join(u, v)?;
                table.push(*lookup.get(&j.map).ok_or_else(|| what(&format!("{u} ∇ {v} missing")))?);
            }
        }
        let labels = homs.iter().map(|h| h.to_string()).collect();
        let monoid = Arc::new(Monoid::from_table(labels, epsilon, table).map_err(|e| HomError::Invalid(e.to_string()))?);
        Ok(HomSet { source, target, homs, monoid, epsilon, lookup })
    }

    pub fn len(&self) -> usize {
        self.homs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.homs.is_empty()
    }

    pub fn index_of(&self, map: &[Elem]) -> Option<usize> {
        self.lookup.get(map).copied()
    }
}

/// A finite category of monoids and join-preserving maps.
#[derive(Debug, Clone)]
pub struct Category {
    pub objects: Vec<Object>,
    /// `homsets[i * k + j]` holds the maps from object `i` to object `j`.
    pub homsets: Vec<HomSet>,
    /// `compose[outer * H + inner][a * |inner| + u]` is the index of `a ∘ u`
    /// in the composite hom-set; empty when not composable.
    compose: Vec<Vec<usize>>,
}

impl Category {
    /// All join-preserving maps between the objects whose `ℓ′` with respect
    /// to the object distances is finite.
    pub fn enumerate(objects: Vec<Object>, limit: u128) -> Result<Category, HomError> {
        let mut parts = Vec::new();
        for (i, a) in objects.iter().enumerate() {
            for (j, b) in objects.iter().enumerate() {
                let homs = enumerate_homs(&a.monoid, &b.monoid, limit)?
                    .into_iter()
                    .filter(|h| ell_prime(h, &a.distance, &b.distance) != Ext::Infinite)
                    .collect();
                parts.push(((i, j), homs));
            }
        }
        Category::from_parts(objects, parts)
    }

    /// Validates user-listed morphisms: every hom-set must be closed under
    /// `∇`, contain the constant neutral map, contain identities on the
    /// diagonal, and composites must be listed.
    pub fn from_parts(objects: Vec<Object>, parts: Vec<((usize, usize), Vec<Hom>)>) -> Result<Category, HomError> {
        let k = objects.len();
        let mut by_pair: Vec<Option<Vec<Hom>>> = vec![None; k * k];
        for ((i, j), homs) in parts {
            if i >= k || j >= k {
                return Err(HomError::Invalid(format!("no object {}", i.max(j))));
            }
            for h in &homs {
                if *h.source != *objects[i].monoid || *h.target != *objects[j].monoid {
                    return Err(HomError::Mismatch);
                }
            }
            by_pair[i * k + j].get_or_insert_with(Vec::new).extend(homs);
        }
        let mut homsets = Vec::with_capacity(k * k);
        for (p, homs) in by_pair.into_iter().enumerate() {
            let (i, j) = (p / k, p % k);
            let mut homs = homs.unwrap_or_default();
            if homs.is_empty() {
                homs.push(Hom::constant(&objects[i].monoid, &objects[j].monoid, objects[j].monoid.neutral()));
            }
            let hs = HomSet::new(i, j, homs)?;
            if i == j && hs.index_of(&Hom::identity(&objects[i].monoid).map).is_none() {
                return Err(HomError::NotClosed(format!("identity on object {i} missing")));
            }
            homsets.push(hs);
        }
        let h = homsets.len();
        let mut comp_tables = vec![Vec::new(); h * h];
        for inner in 0..h {
            for outer in 0..h {
                let (hi, ho) = (&homsets[inner], &homsets[outer]);
                if hi.target != ho.source {
                    continue;
                }
                let dest = &homsets[hi.source * k + ho.target];
                let mut tab = Vec::with_capacity(ho.len() * hi.len());
                for a in &ho.homs {
                    for u in &hi.homs {
                        let c = compose(a, u)?;
                        tab.push(dest.index_of(&c.map).ok_or_else(|| {
                            HomError::NotClosed(format!("composite {a} ∘ {u} missing"))
                        })?);
                    }
                }
                comp_tables[outer * h + inner] = tab;
            }
        }
        Ok(Category { objects, homsets, compose: comp_tables })
    }

    pub fn homset(&self, i: usize, j: usize) -> &HomSet {
        &self.homsets[i * self.objects.len() + j]
    }

    pub fn homset_index(&self, i: usize, j: usize) -> usize {
        i * self.objects.len() + j
    }

    /// Index of `a ∘ u` where `a` is in hom-set `outer` and `u` in `inner`.
    pub fn comp(&self, outer: usize, a: usize, inner: usize, u: usize) -> usize {
        self.compose[outer * self.homsets.len() + inner][a * self.homsets[inner].len() + u]
    }

    /// Hom-set indices with the given source object.
    fn homsets_from(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.objects.len();
        (0..k).map(move |j| i * k + j)
    }

    /// Hom-set indices with the given target object.
    fn homsets_into(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.objects.len();
        (0..k).map(move |i| i * k + j)
    }

    /// `(U∇V)∘X = U∘X ∇ V∘X` and `Y∘(U∇V) = Y∘U ∇ Y∘V` for all listed maps.
    pub fn distribution_laws_hold(&self) -> bool {
        let h = self.homsets.len();
        (0..h).all(|inner| {
            (0..h).all(|outer| {
                let (hi, ho) = (&self.homsets[inner], &self.homsets[outer]);
                if hi.target != ho.source {
                    return true;
                }
                let dest = &self.homsets[self.homset_index(hi.source, ho.target)].monoid;
                let (mi, mo) = (&hi.monoid, &ho.monoid);
                (0..ho.len()).all(|a| {
                    (0..ho.len()).all(|b| {
                        (0..hi.len()).all(|x| {
                            self.comp(outer, mo.join(a, b), inner, x)
                                == dest.join(self.comp(outer, a, inner, x), self.comp(outer, b, inner, x))
                        })
                    })
                }) && (0..hi.len()).all(|u| {
                    (0..hi.len()).all(|v| {
                        (0..ho.len()).all(|y| {
                            self.comp(outer, y, inner, mi.join(u, v))
                                == dest.join(self.comp(outer, y, inner, u), self.comp(outer, y, inner, v))
                        })
                    })
                })
            })
        })
    }
}

/// Lengths and distances on every hom-set of a category.
#[derive(Debug, Clone, PartialEq)]
pub struct HomLengths {
    pub ell: Vec<LengthFn>,
    pub d: Vec<DistanceTable>,
}

impl HomLengths {
    /// User-supplied lengths, one value list per hom-set in hom-set order;
    /// distances are `d_ℓ`.
    pub fn from_values(cat: &Category, values: Vec<Vec<Rational>>) -> Result<HomLengths, HomError> {
        if values.len() != cat.homsets.len() {
            return Err(HomError::Invalid(format!(
                "expected {} hom-set length lists, got {}",
                cat.homsets.len(),
                values.len()
            )));
        }
        let ell = cat
            .homsets
            .iter()
            .zip(values)
            .map(|(hs, v)| {
                crate::length::validate_length(&hs.monoid, v.clone(), Mode::Monotone)
                    .or_else(|_| crate::length::validate_length(&hs.monoid, v, Mode::Nonmonotone))
                    .map_err(|e| HomError::Invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HomLengths::from_ell(ell))
    }

    pub fn from_ell(ell: Vec<LengthFn>) -> HomLengths {
        let d = ell.iter().map(|l| l.table(DistanceKind::D)).collect();
        HomLengths { ell, d }
    }
}

/// `ℓ′` of every map in a hom-set, relative to the object distances.
pub fn ell_primes(cat: &Category, hs: &HomSet) -> Vec<Ext> {
    let (ds, dq) = (&cat.objects[hs.source].distance, &cat.objects[hs.target].distance);
    hs.homs.iter().map(|h| ell_prime(h, ds, dq)).collect()
}

/// `ℓ(U) = min_V ℓ′(U∇V)`, the monotone envelope of `ℓ′` on the hom monoid.
pub fn hom_length(cat: &Category, hs: &HomSet) -> LengthFn {
    let raw: Vec<Rational> = ell_primes(cat, hs)
        .into_iter()
        .map(|e| e.finite().cloned().expect("hom-sets only hold maps with finite ell'"))
        .collect();
    LengthFn::new_unchecked(Arc::clone(&hs.monoid), bar_values(&hs.monoid, &raw), Mode::Monotone)
}

/// Lengths derived from the object distances: `ℓ = ℓ̄′` and `d = d_ℓ` on
/// every hom-set.
pub fn derived_lengths(cat: &Category) -> HomLengths {
    HomLengths::from_ell(cat.homsets.iter().map(|hs| hom_length(cat, hs)).collect())
}

/// `λ(W)`: the infimum of `ℓ(A₁)⋯ℓ(Aₖ)` over words `A₁∘…∘Aₖ = W`, `k ≥ 1`.
/// Words that can pass through a contracting cycle have infimum 0.
pub fn word_lengths(cat: &Category, ell: &[LengthFn]) -> Vec<Vec<Rational>> {
    let mut lam: Vec<Vec<Rational>> = ell.iter().map(|l| l.values().to_vec()).collect();
    let total: usize = cat.homsets.iter().map(|h| h.len()).sum();
    let mut changed: Vec<(usize, usize)> =
        (0..cat.homsets.len()).flat_map(|p| (0..cat.homsets[p].len()).map(move |w| (p, w))).collect();
    let mut round = 0;
    // W ↦ A∘W costs a factor ℓ(A)
    let extend = |lam: &mut Vec<Vec<Rational>>, changed: &[(usize, usize)]| {
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for &(inner, w) in changed {
            let j = cat.homsets[inner].target;
            for outer in cat.homsets_from(j) {
                let dest = cat.homset_index(cat.homsets[inner].source, cat.homsets[outer].target);
                for a in 0..cat.homsets[outer].len() {
                    let c = ell[outer].value(a) * &lam[inner][w];
                    let aw = cat.comp(outer, a, inner, w);
                    if c < lam[dest][aw] {
                        lam[dest][aw] = c;
                        if seen.insert((dest, aw)) {
                            next.push((dest, aw));
                        }
                    }
                }
            }
        }
        next
    };
    while !changed.is_empty() && round <= total {
        changed = extend(&mut lam, &changed);
        round += 1;
    }
    if !changed.is_empty() {
        // still improving after more rounds than maps: a contracting cycle
        let mut stack = changed;
        let mut zeroed: HashSet<(usize, usize)> = stack.iter().copied().collect();
        while let Some((inner, w)) = stack.pop() {
            lam[inner][w] = Rational::zero();
            let j = cat.homsets[inner].target;
            for outer in cat.homsets_from(j) {
                let dest = cat.homset_index(cat.homsets[inner].source, cat.homsets[outer].target);
                for a in 0..cat.homsets[outer].len() {
                    let aw = cat.comp(outer, a, inner, w);
                    if zeroed.insert((dest, aw)) {
                        stack.push((dest, aw));
                    }
                }
            }
        }
    }
    lam
}

/// `ḋ`: the infimum over factorizations `X = A₁…AₙUB₁…Bₘ`,
/// `Y = A₁…AₙVB₁…Bₘ` of `ℓ(A₁)⋯ℓ(Aₙ)·d(U,V)·ℓ(B₁)⋯ℓ(Bₘ)`.
pub fn product_closure(cat: &Category, lengths: &HomLengths) -> Vec<DistanceTable> {
    let lam = word_lengths(cat, &lengths.ell);
    // right factors: e(U∘R, V∘R) ≤ d(U,V)·λ(R)
    let mut right: Vec<Vec<Rational>> = lengths.d.iter().map(|t| t.values().to_vec()).collect();
    for (p, hs) in cat.homsets.iter().enumerate() {
        let n = hs.len();
        for inner in cat.homsets_into(hs.source) {
            let dest = cat.homset_index(cat.homsets[inner].source, hs.target);
            let dn = cat.homsets[dest].len();
            for r in 0..cat.homsets[inner].len() {
                let lr = &lam[inner][r];
                for u in 0..n {
                    let ur = cat.comp(p, u, inner, r);
                    for v in 0..n {
                        let c = lengths.d[p].get(u, v) * lr;
                        let cell = ur * dn + cat.comp(p, v, inner, r);
                        if c < right[dest][cell] {
                            right[dest][cell] = c;
                        }
                    }
                }
            }
        }
    }
    // left factors: ḋ(L∘X, L∘Y) ≤ λ(L)·e(X,Y)
    let mut out = right.clone();
    for (p, hs) in cat.homsets.iter().enumerate() {
        let n = hs.len();
        for outer in cat.homsets_from(hs.target) {
            let dest = cat.homset_index(hs.source, cat.homsets[outer].target);
            let dn = cat.homsets[dest].len();
            for a in 0..cat.homsets[outer].len() {
                let la = &lam[outer][a];
                for u in 0..n {
                    let au = cat.comp(outer, a, p, u);
                    for v in 0..n {
                        let c = la * &right[p][u * n + v];
                        let cell = au * dn + cat.comp(outer, a, p, v);
                        if c < out[dest][cell] {
                            out[dest][cell] = c;
                        }
                    }
                }
            }
        }
    }
    out.into_iter()
        .zip(&cat.homsets)
        .map(|(v, hs)| DistanceTable::from_parts(Arc::clone(&hs.monoid), v, TableKind::ClosedProduct))
        .collect()
}

/// Brute-force oracle for [`product_closure`]: factorizations with at most
/// `max_factors` extra factors in total, built one factor at a time.
pub fn product_closure_bounded(cat: &Category, lengths: &HomLengths, max_factors: usize) -> Vec<DistanceTable> {
    let mut cur: Vec<Vec<Rational>> = lengths.d.iter().map(|t| t.values().to_vec()).collect();
    for _ in 0..max_factors {
        let prev = cur.clone();
        for (p, hs) in cat.homsets.iter().enumerate() {
            let n = hs.len();
            for u in 0..n {
                for v in 0..n {
                    let base = &prev[p][u * n + v];
                    for outer in cat.homsets_from(hs.target) {
                        let dest = cat.homset_index(hs.source, cat.homsets[outer].target);
                        let dn = cat.homsets[dest].len();
                        for a in 0..cat.homsets[outer].len() {
                            let c = lengths.ell[outer].value(a) * base;
                            let cell = cat.comp(outer, a, p, u) * dn + cat.comp(outer, a, p, v);
                            if c < cur[dest][cell] {
                                cur[dest][cell] = c;
                            }
                        }
                    }
                    for inner in cat.homsets_into(hs.source) {
                        let dest = cat.homset_index(cat.homsets[inner].source, hs.target);
                        let dn = cat.homsets[dest].len();
                        for b in 0..cat.homsets[inner].len() {
                            let c = base * lengths.ell[inner].value(b);
                            let cell = cat.comp(p, u, inner, b) * dn + cat.comp(p, v, inner, b);
                            if c < cur[dest][cell] {
                                cur[dest][cell] = c;
                            }
                        }
                    }
                }
            }
        }
    }
    cur.into_iter()
        .zip(&cat.homsets)
        .map(|(v, hs)| DistanceTable::from_parts(Arc::clone(&hs.monoid), v, TableKind::ClosedProduct))
        .collect()
}

/// Which product inequality failed, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductWitness {
    /// `true` for `d(X∘U, X∘V) ≤ ℓ(X)·d(U,V)`, `false` for the right-hand form.
    pub left: bool,
    pub homset: usize,
    pub u: usize,
    pub v: usize,
    pub factor_homset: usize,
    pub x: usize,
}

/// First violation of `d(U∘X, V∘X) ≤ d(U,V)·ℓ(X)` or
/// `d(X∘U, X∘V) ≤ ℓ(X)·d(U,V)`.
pub fn product_inequality_witness(cat: &Category, d: &[DistanceTable], ell: &[LengthFn]) -> Option<ProductWitness> {
    for (p, hs) in cat.homsets.iter().enumerate() {
        let n = hs.len();
        for u in 0..n {
            for v in 0..n {
                let duv = d[p].get(u, v);
                for outer in cat.homsets_from(hs.target) {
                    let dest = cat.homset_index(hs.source, cat.homsets[outer].target);
                    for x in 0..cat.homsets[outer].len() {
                        let lhs = d[dest].get(cat.comp(outer, x, p, u), cat.comp(outer, x, p, v));
                        if *lhs > ell[outer].value(x) * duv {
                            return Some(ProductWitness { left: true, homset: p, u, v, factor_homset: outer, x });
                        }
                    }
                }
                for inner in cat.homsets_into(hs.source) {
                    let dest = cat.homset_index(cat.homsets[inner].source, hs.target);
                    for x in 0..cat.homsets[inner].len() {
                        let lhs = d[dest].get(cat.comp(p, u, inner, x), cat.comp(p, v, inner, x));
                        if *lhs > duv * ell[inner].value(x) {
                            return Some(ProductWitness { left: false, homset: p, u, v, factor_homset: inner, x });
                        }
                    }
                }
            }
        }
    }
    None
}

/// `d_ℓ` satisfies the product inequalities, and so does `σ_ℓ`. The two
/// flags are expected to agree.
pub fn paired_product_flags(cat: &Category, ell: &[LengthFn]) -> (bool, bool) {
    let d: Vec<_> = ell.iter().map(|l| l.table(DistanceKind::D)).collect();
    let s: Vec<_> = ell.iter().map(|l| l.table(DistanceKind::Sigma)).collect();
    (
        product_inequality_witness(cat, &d, ell).is_none(),
        product_inequality_witness(cat, &s, ell).is_none(),
    )
}

/// First composable pair with `ℓ(U∘V) > ℓ(U)·ℓ(V)`, as
/// `(outer hom-set, U, inner hom-set, V)`.
pub fn submultiplicativity_witness(
    cat: &Category,
    values: &dyn Fn(usize, usize) -> Rational,
) -> Option<(usize, usize, usize, usize)> {
    for (inner, hi) in cat.homsets.iter().enumerate() {
        for outer in cat.homsets_from(hi.target) {
            let dest = cat.homset_index(hi.source, cat.homsets[outer].target);
            for u in 0..cat.homsets[outer].len() {
                for v in 0..hi.len() {
                    if values(dest, cat.comp(outer, u, inner, v)) > values(outer, u) * values(inner, v) {
                        return Some((outer, u, inner, v));
                    }
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct HomIdealResult {
    pub lengths: HomLengths,
    pub iterations: usize,
    /// Stopped on exact repetition rather than on the tolerance.
    pub exact: bool,
}

/// Iterates `ḋ → d̃̂̇ → ℓ̃̂̇(X) = d̃̂̇(X, ε) → ℓ̄ → d_ℓ` on all hom-sets at once.
pub fn hom_ideal_length(
    cat: &Category,
    start: &HomLengths,
    tol: Option<&Rational>,
    max_iter: usize,
) -> Result<HomIdealResult, HomError> {
    let mut cur = start.clone();
    for it in 1..=max_iter {
        let dot = product_closure(cat, &cur);
        let ell: Vec<LengthFn> = dot
            .iter()
            .zip(&cat.homsets)
            .map(|(t, hs)| {
                let th = tiha(t);
                let ext: Vec<Rational> = (0..hs.len()).map(|x| th.get(x, hs.epsilon).clone()).collect();
                LengthFn::new_unchecked(Arc::clone(&hs.monoid), bar_values(&hs.monoid, &ext), Mode::Monotone)
            })
            .collect();
        let next = HomLengths::from_ell(ell);
        if next.ell == cur.ell {
            return Ok(HomIdealResult { lengths: next, iterations: it, exact: true });
        }
        let change = next
            .d
            .iter()
            .zip(&cur.d)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()))
            .max()
            .unwrap_or_else(Rational::zero);
        cur = next;
        if tol.is_some_and(|t| &change < t) {
            return Ok(HomIdealResult { lengths: cur, iterations: it, exact: false });
        }
    }
    Err(HomError::NotConverged(max_iter))
}

/// `ď`-classes per hom-set (zero distance) are compatible with composition:
/// `[X₁]=[X₂]`, `[Y₁]=[Y₂]` imply `[X₁∘Y₁]=[X₂∘Y₂]`. Returns the first
/// counterexample as `(outer, X₁, X₂, inner, Y₁, Y₂)`.
pub fn quotient_category_witness(
    cat: &Category,
    d: &[DistanceTable],
) -> Option<(usize, usize, usize, usize, usize, usize)> {
    for (inner, hi) in cat.homsets.iter().enumerate() {
        for outer in cat.homsets_from(hi.target) {
            let dest = cat.homset_index(hi.source, cat.homsets[outer].target);
            let ho = &cat.homsets[outer];
            for x1 in 0..ho.len() {
                for x2 in 0..ho.len() {
                    if !d[outer].get(x1, x2).is_zero() {
                        continue;
                    }
                    for y1 in 0..hi.len() {
                        for y2 in 0..hi.len() {
                            if d[inner].get(y1, y2).is_zero()
                                && !d[dest].get(cat.comp(outer, x1, inner, y1), cat.comp(outer, x2, inner, y2)).is_zero()
                            {
                                return Some((outer, x1, x2, inner, y1, y2));
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

/// `log inf ℓ(φ)ℓ(φ⁻¹)` over isomorphisms `φ` between two objects.
#[derive(Debug, Clone, PartialEq)]
pub struct BanachMazur {
    /// `None` when the objects are not isomorphic in the category.
    pub product: Option<Rational>,
    /// `+∞` without isomorphisms, `−∞` when the product is 0.
    pub log: f64,
}

pub fn banach_mazur(cat: &Category, ell: &[LengthFn], i: usize, j: usize) -> BanachMazur {
    let (p, q) = (cat.homset_index(i, j), cat.homset_index(j, i));
    let mut best: Option<Rational> = None;
    for (a, phi) in cat.homsets[p].homs.iter().enumerate() {
        let Some(inv) = phi.inverse() else { continue };
        let Some(b) = cat.homsets[q].index_of(&inv.map) else { continue };
        let prod = ell[p].value(a) * ell[q].value(b);
        best = Some(match best {
            Some(cur) => min_r(&cur, &prod).clone(),
            None => prod,
        });
    }
    let log = match &best {
        None => f64::INFINITY,
        Some(r) if r.is_zero() => f64::NEG_INFINITY,
        Some(r) => log_rational(r),
    };
    BanachMazur { product: best, log }
}

/// Natural log of a positive rational, stable for large numerators and denominators.
fn log_rational(r: &Rational) -> f64 {
    let ln = |b: &num_bigint::BigInt| {
        let bits = b.bits();
        let shift = bits.saturating_sub(60);
        (b >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln(r.numer()) - ln(r.denom())
}

/// Outcome of [`uniform_continuity_lift`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftReport {
    /// `d_Q(Ua,Ub) ≤ M·d_S(a,b)` for all pairs.
    pub all_pairs: bool,
    /// `d̃̂_Q(Ua,Ub) ≤ M·d̃̂_S(a,b)` for all pairs.
    pub closed: bool,
}

/// From `d_Q(Ua,Ub) ≤ M·d_S(a,b)` on comparable pairs `a ≤ b`, checks the
/// bound on all pairs and on the closed tables.
pub fn uniform_continuity_lift(u: &Hom, m: &Rational, ls: &LengthFn, lq: &LengthFn) -> Result<LiftReport, HomError> {
    let (ds, dq) = (ls.table(DistanceKind::D), lq.table(DistanceKind::D));
    let s = &u.source;
    let n = s.len();
    let holds = |dq: &DistanceTable, ds: &DistanceTable, a: Elem, b: Elem| *dq.get(u.map[a], u.map[b]) <= m * ds.get(a, b);
    for a in 0..n {
        for b in 0..n {
            if s.leq(a, b) && !holds(&dq, &ds, a, b) {
                return Err(HomError::PremiseFails(vec![s.label(a).into(), s.label(b).into()]));
            }
        }
    }
    let all = |dq: &DistanceTable, ds: &DistanceTable| (0..n).all(|a| (0..n).all(|b| holds(dq, ds, a, b)));
    Ok(LiftReport { all_pairs: all(&dq, &ds), closed: all(&tiha(&dq), &tiha(&ds)) })
}

/// Objects with their `d_ℓ` as distance.
pub fn object_from_length(name: &str, l: &LengthFn) -> Object {
    Object { name: name.to_string(), monoid: Arc::clone(l.monoid()), distance: l.table(DistanceKind::D) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fix_p2;
    use crate::monoid::free_semilattice;
    use crate::num::int;

    fn chain2() -> Arc<Monoid> {
        Arc::new(free_semilattice(1).unwrap())
    }

    #[test]
    fn basic_homs() {
        let l = fix_p2();
        let m = l.monoid();
        let id = Hom::identity(m);
        assert!(id.is_unital());
        let c = Hom::constant(m, m, 1);
        assert!(validate_hom(m, m, c.map().to_vec()).is_ok() && !c.is_unital());
        for a in m.elements() {
            let t = Hom::translation(m, a);
            assert!(validate_hom(m, m, t.map().to_vec()).is_ok());
            assert_eq!(t.is_unital(), a == m.neutral());
        }
        assert!(matches!(validate_hom(m, m, vec![0, 1, 1, 3]), Err(HomError::NotJoinPreserving { .. })));
        assert_eq!(hom_join(&c, &c).unwrap(), c);
        assert_eq!(compose(&id, &c).unwrap(), c);
    }

    #[test]
    fn enumeration() {
        let c = chain2();
        let homs = enumerate_homs(&c, &c, ENUMERATION_LIMIT).unwrap();
        let maps: Vec<&[Elem]> = homs.iter().map(|h| h.map()).collect();
        assert_eq!(maps, vec![&[0, 0][..], &[0, 1], &[1, 1]]);
        let trivial = Arc::new(Monoid::from_table(vec!["e".into()], 0, vec![0]).unwrap());
        assert_eq!(enumerate_homs(&Arc::new(free_semilattice(2).unwrap()), &trivial, 10).unwrap().len(), 1);
        let m = fix_p2().monoid().clone();
        let all = enumerate_homs(&m, &m, ENUMERATION_LIMIT).unwrap();
        for a in m.elements() {
            assert!(all.contains(&Hom::translation(&m, a)));
        }
        // brute force over all maps
        let brute = (0..256usize)
            .filter(|code| {
                let map: Vec<Elem> = (0..4).map(|i| code >> (2 * i) & 3).collect();
                validate_hom(&m, &m, map).is_ok()
            })
            .count();
        assert_eq!(all.len(), brute);
        assert!(matches!(enumerate_homs(&m, &m, 10), Err(HomError::TooLarge { .. })));
    }

    #[test]
    fn ell_prime_examples() {
        let l = fix_p2();
        let m = l.monoid();
        let d = l.table(DistanceKind::D);
        assert_eq!(ell_prime(&Hom::identity(m), &d, &d), Ext::Finite(int(1)));
        assert_eq!(ell_prime(&Hom::constant(m, m, 3), &d, &d), Ext::Finite(int(0)));
        let zero = DistanceTable::<Rational>::zero(Arc::clone(m));
        let swap = validate_hom(m, m, vec![0, 2, 1, 3]).unwrap();
        assert_eq!(ell_prime(&swap, &d, &zero), Ext::Finite(int(0)));
        assert_eq!(ell_prime(&swap, &zero, &d), Ext::Infinite);
    }

    fn small_category() -> Category {
        let p2 = fix_p2();
        let c = chain2();
        let lc = crate::length::validate_length(&c, vec![int(0), int(2)], Mode::Monotone).unwrap();
        Category::enumerate(vec![object_from_length("p2", &p2), object_from_length("c2", &lc)], ENUMERATION_LIMIT)
            .unwrap()
    }

    #[test]
    fn category_laws() {
        let cat = small_category();
        assert!(cat.distribution_laws_hold());
        let lengths = derived_lengths(&cat);
        for (hs, l) in cat.homsets.iter().zip(&lengths.ell) {
            assert_eq!(l.mode(), Mode::Monotone);
            assert!(crate::monoid::validate_monoid(&hs.monoid.to_raw()).is_ok());
        }
        let primes: Vec<Vec<Rational>> =
            cat.homsets.iter().map(|hs| ell_primes(&cat, hs).into_iter().map(|e| e.finite().unwrap().clone()).collect()).collect();
        assert!(submultiplicativity_witness(&cat, &|p, u| primes[p][u].clone()).is_none());
    }

    #[test]
    fn product_closure_properties() {
        let cat = small_category();
        let lengths = derived_lengths(&cat);
        let dot = product_closure(&cat, &lengths);
        for (a, b) in dot.iter().zip(&lengths.d) {
            assert!(a.le(b));
        }
        assert!(product_inequality_witness(&cat, &dot, &lengths.ell).is_none());
        assert_eq!(product_closure_bounded(&cat, &lengths, 3), dot);
    }

    #[test]
    fn single_identity_category() {
        let l = fix_p2();
        let obj = object_from_length("p2", &l);
        let m = Arc::clone(&obj.monoid);
        let cat = Category::from_parts(
            vec![obj],
            vec![((0, 0), vec![Hom::identity(&m), Hom::constant(&m, &m, 0)])],
        )
        .unwrap();
        let lengths = derived_lengths(&cat);
        assert_eq!(product_closure(&cat, &lengths), lengths.d);
        let r = hom_ideal_length(&cat, &lengths, None, 100).unwrap();
        assert!(r.exact);
        let bm = banach_mazur(&cat, &r.lengths.ell, 0, 0);
        assert_eq!(bm.product, Some(int(1)));
        assert_eq!(bm.log, 0.0);
    }

    #[test]
    fn missing_composites_are_rejected() {
        let m = fix_p2().monoid().clone();
        let obj = object_from_length("p2", &fix_p2());
        let err = Category::from_parts(
            vec![obj],
            vec![((0, 0), vec![Hom::identity(&m), Hom::constant(&m, &m, 0), Hom::translation(&m, 1), Hom::translation(&m, 2)])],
        )
        .unwrap_err();
        assert!(matches!(err, HomError::NotClosed(_)));
    }

    #[test]
    fn ideal_hom_lengths() {
        let cat = small_category();
        let lengths = derived_lengths(&cat);
        let r = hom_ideal_length(&cat, &lengths, None, 1000).unwrap();
        assert!(product_inequality_witness(&cat, &r.lengths.d, &r.lengths.ell).is_none());
        assert!(submultiplicativity_witness(&cat, &|p, u| r.lengths.ell[p].value(u).clone()).is_none());
        assert!(quotient_category_witness(&cat, &r.lengths.d).is_none());
        let (pd, ps) = paired_product_flags(&cat, &r.lengths.ell);
        assert_eq!(pd, ps);
        assert_eq!(banach_mazur(&cat, &r.lengths.ell, 0, 1).log, f64::INFINITY);
    }

    #[test]
    fn lift() {
        let l = fix_p2();
        let m = l.monoid();
        let r = uniform_continuity_lift(&Hom::identity(m), &int(1), &l, &l).unwrap();
        assert!(r.all_pairs && r.closed);
        let r = uniform_continuity_lift(&Hom::constant(m, m, 2), &int(0), &l, &l).unwrap();
        assert!(r.all_pairs && r.closed);
        for a in m.elements() {
            let r = uniform_continuity_lift(&Hom::translation(m, a), &int(1), &l, &l).unwrap();
            assert!(r.all_pairs && r.closed);
        }
        assert!(matches!(
            uniform_continuity_lift(&Hom::identity(m), &crate::num::ratio(1, 2), &l, &l),
            Err(HomError::PremiseFails(_))
        ));
    }
}
