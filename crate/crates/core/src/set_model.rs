//! Weighted finite sets under union: the exactly solvable reference model.
//!
//! Here `ℓ = μ`, and `d`, `σ` and `ζ` have closed forms in terms of set
//! differences, which makes this module the oracle for the rest of the crate.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boolean::BoolExpr;
use crate::length::{validate_length, LengthFn, Mode};
use crate::monoid::{self, Elem, Monoid, MonoidError};
use crate::num::{int, max_r, Rational};

/// At most this many points, so that a subset fits in a `u64` mask.
pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SetModelError {
    #[error("negative weight for point {0:?}")]
    NegativeWeight(String),
    #[error("duplicate weight for point {0:?}")]
    DuplicateWeight(String),
    #[error("at most {MAX_POINTS} points are supported, got {0}")]
    TooManyPoints(usize),
    #[error("no set {0:?} in the family")]
    UnknownSet(String),
    #[error("complements of the whole universe are not realizable in the set model")]
    UnsupportedComplement,
    #[error(transparent)]
    Monoid(#[from] MonoidError),
}

/// A union-closed family of weighted subsets of a finite universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetInstance {
    points: Vec<String>,
    weights: Vec<Rational>,
    family: Vec<u64>,
}

/// A set instance together with the monoid and length it induces.
#[derive(Debug, Clone)]
pub struct SetModel {
    pub instance: SetInstance,
    pub monoid: Arc<Monoid>,
    pub length: LengthFn,
}

/// Closes `sets` under union, adds `∅`, and materializes the monoid with
/// `ℓ = μ`. Points named in `weights` come first, in order; points that
/// only appear in `sets` get weight 1.
pub fn build_set_instance<S: AsRef<str>>(
    sets: &[Vec<S>],
    weights: &[(String, Rational)],
) -> Result<SetModel, SetModelError> {
    let mut points: Vec<String> = Vec::new();
    let mut w: Vec<Rational> = Vec::new();
    for (p, v) in weights {
        if v.is_negative() {
            return Err(SetModelError::NegativeWeight(p.clone()));
        }
        if points.contains(p) {
            return Err(SetModelError::DuplicateWeight(p.clone()));
        }
        points.push(p.clone());
        w.push(v.clone());
    }
    for p in sets.iter().flatten() {
        let p = p.as_ref();
        if !points.iter().any(|q| q == p) {
            points.push(p.to_string());
            w.push(int(1));
        }
    }
    if points.len() > MAX_POINTS {
        return Err(SetModelError::TooManyPoints(points.len()));
    }
    let masks: Vec<u64> = sets
        .iter()
        .map(|s| {
            s.iter()
                .map(|p| 1u64 << points.iter().position(|q| q == p.as_ref()).expect("point registered"))
                .fold(0, |a, b| a | b)
        })
        .collect();
    SetInstance { points, weights: w, family: union_closure(&masks) }.into_model()
}

/// Unit weights on every point.
pub fn build_unit_instance<S: AsRef<str>>(sets: &[Vec<S>]) -> Result<SetModel, SetModelError> {
    build_set_instance(sets, &[])
}

fn union_closure(masks: &[u64]) -> Vec<u64> {
    let mut family: BTreeSet<u64> = BTreeSet::from([0]);
    for &m in masks {
        if family.contains(&m) {
            continue;
        }
        let grown: Vec<u64> = family.iter().map(|&f| f | m).collect();
        family.extend(grown);
    }
    family.into_iter().collect()
}

impl SetInstance {
    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Family members as bitmasks over [`SetInstance::points`], in element order.
    pub fn family(&self) -> &[u64] {
        &self.family
    }

    pub fn measure(&self, mask: u64) -> Rational {
        self.weights
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    fn into_model(self) -> Result<SetModel, SetModelError> {
        let monoid = Arc::new(monoid::from_masks(&self.points, &self.family)?);
        let values = self.family.iter().map(|&m| self.measure(m)).collect();
        let length = validate_length(&monoid, values, Mode::Monotone)
            .expect("a measure on a union-closed family is a monotone length");
        Ok(SetModel { instance: self, monoid, length })
    }

    /// `max(μ(A∖B), μ(B∖A))`.
    pub fn oracle_d(&self, a: Elem, b: Elem) -> Rational {
        let (a, b) = (self.family[a], self.family[b]);
        max_r(&self.measure(a & !b), &self.measure(b & !a)).clone()
    }

    /// `μ(A∖B) + μ(B∖A)`.
    pub fn oracle_sigma(&self, a: Elem, b: Elem) -> Rational {
        let (a, b) = (self.family[a], self.family[b]);
        self.measure(a & !b) + self.measure(b & !a)
    }

    /// Measure of the subset of the universe that `e` denotes. Complements
    /// are only realizable as set differences, so `~x` and `1` are rejected.
    pub fn oracle_zeta(&self, e: &BoolExpr) -> Result<Rational, SetModelError> {
        Ok(self.measure(self.realize(e)?))
    }

    pub fn realize(&self, e: &BoolExpr) -> Result<u64, SetModelError> {
        Ok(match e {
            BoolExpr::Atom(x) => self.family[*x],
            BoolExpr::Zero => 0,
            BoolExpr::One | BoolExpr::Complement(_) => return Err(SetModelError::UnsupportedComplement),
            BoolExpr::Union(c) => c.iter().map(|c| self.realize(c)).try_fold(0, |a, b| b.map(|b| a | b))?,
            BoolExpr::Intersection(c) => {
                c.iter().map(|c| self.realize(c)).try_fold(u64::MAX, |a, b| b.map(|b| a & b))?
            }
            BoolExpr::Difference(a, b) => self.realize(a)? & !self.realize(b)?,
        })
    }
}

impl SetModel {
    pub fn oracle_d_labels(&self, a: &str, b: &str) -> Result<Rational, SetModelError> {
        Ok(self.instance.oracle_d(self.index(a)?, self.index(b)?))
    }

    pub fn oracle_sigma_labels(&self, a: &str, b: &str) -> Result<Rational, SetModelError> {
        Ok(self.instance.oracle_sigma(self.index(a)?, self.index(b)?))
    }

    fn index(&self, label: &str) -> Result<Elem, SetModelError> {
        self.monoid.index_of(label).map_err(|_| SetModelError::UnknownSet(label.to_string()))
    }
}

/// Random instance with `1..=max_points` points, integer weights in `0..=5`
/// and a family of at most `max_family` members.
pub fn random_set_instance(seed: u64, max_points: usize, max_family: usize) -> SetModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_points = rng.gen_range(1..=max_points.clamp(1, MAX_POINTS));
    let points: Vec<String> = (1..=n_points).map(|i| format!("p{i}")).collect();
    let weights: Vec<Rational> = (0..n_points).map(|_| int(rng.gen_range(0..=5))).collect();
    let full = if n_points == 64 { u64::MAX } else { (1u64 << n_points) - 1 };
    let target = rng.gen_range(2..=max_family.max(2));
    let mut family = vec![0u64];
    for _ in 0..4 * target {
        if family.len() >= target {
            break;
        }
        let pick = rng.gen::<u64>() & full;
        let grown = union_closure(&[family.clone(), vec![pick]].concat());
        if grown.len() <= max_family {
            family = grown;
        }
    }
    SetInstance { points, weights, family }
        .into_model()
        .expect("union-closed family")
}

/// Random monotone instance on at most `max_elements` elements whose length
/// is generally *not* a measure: either `max_i min(c_i, μ_i)` for random
/// measures `μ_i` and caps `c_i`, or [`crate::length::random_monotone_length`].
/// Both constructions are monotone and subadditive by design.
pub fn random_monotone_instance(seed: u64, max_elements: usize) -> (Arc<Monoid>, LengthFn) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_gen = if max_elements >= 8 { 3 } else if max_elements >= 4 { 2 } else { 1 };
    let keep = rng.gen_range(2..=max_elements.clamp(2, 1 << n_gen));
    let names: Vec<String> = (1..=n_gen).map(|i| i.to_string()).collect();
    let family: Vec<u64> = monoid::random_family(n_gen, keep, rng.gen())
        .into_iter()
        .take_while(|_| true)
        .collect();
    let family = if family.len() > max_elements { shrink(&family, max_elements) } else { family };
    let m = Arc::new(monoid::from_masks(&names, &family).expect("union-closed family"));
    if rng.gen_bool(0.5) {
        return (Arc::clone(&m), crate::length::random_monotone_length(&m, 4, rng.gen()));
    }
    let terms: Vec<(Vec<i64>, i64)> = (0..rng.gen_range(1..=3))
        .map(|_| ((0..n_gen).map(|_| rng.gen_range(0..=3)).collect(), rng.gen_range(1..=6)))
        .collect();
    let values = family
        .iter()
        .map(|&mask| {
            let v = terms
                .iter()
                .map(|(w, cap)| {
                    let mu: i64 = (0..n_gen).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
                    mu.min(*cap)
                })
                .max()
                .unwrap_or(0);
            int(v)
        })
        .collect();
    let l = validate_length(&m, values, Mode::Monotone).expect("max of capped measures is a length");
    (m, l)
}

/// Largest union-closed prefix-by-size subfamily with at most `cap` members.
fn shrink(family: &[u64], cap: usize) -> Vec<u64> {
    let mut sorted = family.to_vec();
    sorted.sort_by_key(|m| (m.count_ones(), *m));
    let mut keep: Vec<u64> = Vec::new();
    for m in sorted {
        let grown = union_closure(&[keep.clone(), vec![m]].concat());
        if grown.len() <= cap {
            keep = grown;
        }
    }
    keep
}
