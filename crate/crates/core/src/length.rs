//! Length functions and the distance candidates derived from them.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::monoid::{Elem, Monoid, MonoidError};
use crate::num::{max_r, min_r, to_f64, Rational, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Monotone,
    Nonmonotone,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Monotone => "monotone",
            Mode::Nonmonotone => "nonmonotone",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthViolation {
    Negative { x: String },
    NeutralNonzero,
    NotSubadditive { x: String, y: String },
    NotMonotone { x: String, y: String },
}

impl fmt::Display for LengthViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthViolation::Negative { x } => write!(f, "negative length at {x}"),
            LengthViolation::NeutralNonzero => write!(f, "length of the neutral element is not 0"),
            LengthViolation::NotSubadditive { x, y } => write!(f, "ℓ({x}∇{y}) > ℓ({x}) + ℓ({y})"),
            LengthViolation::NotMonotone { x, y } => write!(f, "ℓ({x}) > ℓ({x}∇{y})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LengthError {
    #[error("expected {expected} length values, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("length axioms violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<LengthViolation>),
    #[error("exponent p must be a finite real ≥ 1, got {0}")]
    BadP(f64),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
}

/// A validated length function `ℓ` on a monoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthFn {
    monoid: Arc<Monoid>,
    values: Vec<Rational>,
    mode: Mode,
}

/// Checks `ℓ(ε) = 0`, nonnegativity, subadditivity and (monotone mode)
/// `ℓ(x) ≤ ℓ(x∇y)`. Each violated rule is reported once with a witness.
pub fn validate_length(m: &Arc<Monoid>, values: Vec<Rational>, mode: Mode) -> Result<LengthFn, LengthError> {
    if values.len() != m.len() {
        return Err(LengthError::WrongCount { expected: m.len(), got: values.len() });
    }
    let violations = length_violations(m, &values, mode);
    if violations.is_empty() {
        Ok(LengthFn { monoid: Arc::clone(m), values, mode })
    } else {
        Err(LengthError::Invalid(violations))
    }
}

pub fn length_violations(m: &Monoid, values: &[Rational], mode: Mode) -> Vec<LengthViolation> {
    let l = |x: Elem| m.label(x).to_string();
    let mut out: Vec<LengthViolation> = m
        .elements()
        .filter(|&x| values[x].is_negative())
        .map(|x| LengthViolation::Negative { x: l(x) })
        .collect();
    if !values[m.neutral()].is_zero() {
        out.push(LengthViolation::NeutralNonzero);
    }
    let pairs = || m.elements().flat_map(|x| m.elements().map(move |y| (x, y)));
    if let Some((x, y)) = pairs().find(|&(x, y)| values[m.join(x, y)] > &values[x] + &values[y]) {
        out.push(LengthViolation::NotSubadditive { x: l(x), y: l(y) });
    }
    if mode == Mode::Monotone {
        if let Some((x, y)) = pairs().find(|&(x, y)| values[x] > values[m.join(x, y)]) {
            out.push(LengthViolation::NotMonotone { x: l(x), y: l(y) });
        }
    }
    out
}

impl LengthFn {
    /// Wraps values already known to satisfy the axioms of `mode`.
    pub(crate) fn new_unchecked(monoid: Arc<Monoid>, values: Vec<Rational>, mode: Mode) -> LengthFn {
        debug_assert!(length_violations(&monoid, &values, mode).is_empty());
        LengthFn { monoid, values, mode }
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, x: Elem) -> &Rational {
        &self.values[x]
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Same values, declared in another mode; fails if the values do not
    /// satisfy that mode's axioms.
    pub fn with_mode(&self, mode: Mode) -> Result<LengthFn, LengthError> {
        validate_length(&self.monoid, self.values.clone(), mode)
    }

    /// `d(x,y)`: `ℓ(x∇y) − ℓx ∧ ℓy` in monotone mode, otherwise
    /// `|ℓ(x∇y) − ℓx| ∨ |ℓ(x∇y) − ℓy|`.
    pub fn d(&self, x: Elem, y: Elem) -> Rational {
        let j = &self.values[self.monoid.join(x, y)];
        let (lx, ly) = (&self.values[x], &self.values[y]);
        match self.mode {
            Mode::Monotone => j - min_r(lx, ly),
            Mode::Nonmonotone => max_r(&(j - lx).abs(), &(j - ly).abs()).clone(),
        }
    }

    /// `σ(x,y)`: `2ℓ(x∇y) − ℓx − ℓy` in monotone mode, otherwise the sum
    /// of the two absolute differences.
    pub fn sigma(&self, x: Elem, y: Elem) -> Rational {
        let j = &self.values[self.monoid.join(x, y)];
        let (lx, ly) = (&self.values[x], &self.values[y]);
        match self.mode {
            Mode::Monotone => j + j - lx - ly,
            Mode::Nonmonotone => (j - lx).abs() + (j - ly).abs(),
        }
    }

    /// `σ_p(x,y) = (|ℓ(x∇y)−ℓx|^p + |ℓ(x∇y)−ℓy|^p)^{1/p}`, generally irrational.
    pub fn sigma_p(&self, x: Elem, y: Elem, p: f64) -> Result<f64, LengthError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(LengthError::BadP(p));
        }
        let j = &self.values[self.monoid.join(x, y)];
        let a = to_f64(&(j - &self.values[x]).abs());
        let b = to_f64(&(j - &self.values[y]).abs());
        if p == 1.0 {
            return Ok(a + b);
        }
        Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
    }

    /// `δ_y(x) = ℓ(x) − ℓ(x∇y)`.
    pub fn delta(&self, y: Elem, x: Elem) -> Rational {
        &self.values[x] - &self.values[self.monoid.join(x, y)]
    }

    pub fn d_labels(&self, x: &str, y: &str) -> Result<Rational, LengthError> {
        Ok(self.d(self.monoid.index_of(x)?, self.monoid.index_of(y)?))
    }

    pub fn sigma_labels(&self, x: &str, y: &str) -> Result<Rational, LengthError> {
        Ok(self.sigma(self.monoid.index_of(x)?, self.monoid.index_of(y)?))
    }

    pub fn sigma_p_labels(&self, x: &str, y: &str, p: f64) -> Result<f64, LengthError> {
        self.sigma_p(self.monoid.index_of(x)?, self.monoid.index_of(y)?, p)
    }

    pub fn delta_labels(&self, y: &str, x: &str) -> Result<Rational, LengthError> {
        Ok(self.delta(self.monoid.index_of(y)?, self.monoid.index_of(x)?))
    }

    pub fn table(&self, kind: DistanceKind) -> DistanceTable {
        let n = self.monoid.len();
        let mut values = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                values.push(match kind {
                    DistanceKind::D => self.d(x, y),
                    DistanceKind::Sigma => self.sigma(x, y),
                });
            }
        }
        let kind = match kind {
            DistanceKind::D => TableKind::D,
            DistanceKind::Sigma => TableKind::Sigma,
        };
        DistanceTable { monoid: Arc::clone(&self.monoid), values, kind }
    }

    pub fn sigma_p_table(&self, p: f64) -> Result<DistanceTable<f64>, LengthError> {
        let n = self.monoid.len();
        let mut values = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                values.push(self.sigma_p(x, y, p)?);
            }
        }
        Ok(DistanceTable { monoid: Arc::clone(&self.monoid), values, kind: TableKind::SigmaP(p) })
    }

    /// Monotone envelope `ℓ̄(x) = min_z ℓ(x∇z)`.
    pub fn bar(&self) -> LengthFn {
        let values = bar_values(&self.monoid, &self.values);
        LengthFn::new_unchecked(Arc::clone(&self.monoid), values, Mode::Monotone)
    }

    /// Pointwise `Σ λᵢ ℓᵢ` over length functions on the same monoid.
    pub fn combine(terms: &[(Rational, &LengthFn)]) -> Result<LengthFn, LengthError> {
        let first = terms.first().expect("at least one term").1;
        let n = first.monoid.len();
        let mut values = vec![Rational::zero(); n];
        let mut mode = Mode::Monotone;
        for (lambda, l) in terms {
            assert_eq!(l.monoid, first.monoid, "length functions live on different monoids");
            if l.mode == Mode::Nonmonotone {
                mode = Mode::Nonmonotone;
            }
            for (v, w) in values.iter_mut().zip(&l.values) {
                *v += lambda * w;
            }
        }
        validate_length(&first.monoid, values, mode)
    }
}

/// `x ↦ min_z values(x∇z)` on raw per-element values.
pub fn bar_values(m: &Monoid, values: &[Rational]) -> Vec<Rational> {
    m.elements()
        .map(|x| {
            m.elements()
                .map(|z| &values[m.join(x, z)])
                .min()
                .expect("monoid is nonempty")
                .clone()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    D,
    Sigma,
}

/// What a [`DistanceTable`] was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableKind {
    D,
    Sigma,
    SigmaP(f64),
    ClosedDelta,
    ClosedNabla,
    ClosedBoth,
    ClosedProduct,
    Custom,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableKind::D => f.write_str("d"),
            TableKind::Sigma => f.write_str("sigma"),
            TableKind::SigmaP(p) => write!(f, "sigma_p({p})"),
            TableKind::ClosedDelta => f.write_str("closed-delta"),
            TableKind::ClosedNabla => f.write_str("closed-nabla"),
            TableKind::ClosedBoth => f.write_str("closed-both"),
            TableKind::ClosedProduct => f.write_str("closed-product"),
            TableKind::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("expected {expected} table entries, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("negative entry at ({x}, {y})")]
    Negative { x: String, y: String },
    #[error("asymmetric entries at ({x}, {y})")]
    Asymmetric { x: String, y: String },
    #[error("nonzero diagonal at {x}")]
    NonzeroDiagonal { x: String },
}

/// Positive, symmetric, nilpotent function on pairs of monoid elements.
#[derive(Debug, Clone)]
pub struct DistanceTable<V = Rational> {
    monoid: Arc<Monoid>,
    values: Vec<V>,
    kind: TableKind,
}

impl<V: PartialEq> PartialEq for DistanceTable<V> {
    fn eq(&self, other: &Self) -> bool {
        self.monoid == other.monoid && self.values == other.values
    }
}

impl<V: Weight> DistanceTable<V> {
    /// Validates a row-major `n×n` table.
    pub fn new(monoid: Arc<Monoid>, values: Vec<V>, kind: TableKind) -> Result<Self, TableError> {
        let n = monoid.len();
        if values.len() != n * n {
            return Err(TableError::WrongCount { expected: n * n, got: values.len() });
        }
        let l = |x: Elem| monoid.label(x).to_string();
        for x in 0..n {
            if !values[x * n + x].is_zero() {
                return Err(TableError::NonzeroDiagonal { x: l(x) });
            }
            for y in 0..n {
                let v = &values[x * n + y];
                if *v < V::zero() {
                    return Err(TableError::Negative { x: l(x), y: l(y) });
                }
                if *v != values[y * n + x] {
                    return Err(TableError::Asymmetric { x: l(x), y: l(y) });
                }
            }
        }
        Ok(DistanceTable { monoid, values, kind })
    }

    pub(crate) fn from_parts(monoid: Arc<Monoid>, values: Vec<V>, kind: TableKind) -> Self {
        debug_assert_eq!(values.len(), monoid.len() * monoid.len());
        DistanceTable { monoid, values, kind }
    }

    /// All-zero table.
    pub fn zero(monoid: Arc<Monoid>) -> Self {
        let n = monoid.len();
        DistanceTable { monoid, values: vec![V::zero(); n * n], kind: TableKind::Custom }
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: TableKind) -> Self {
        self.kind = kind;
        self
    }

    #[inline]
    pub fn get(&self, x: Elem, y: Elem) -> &V {
        &self.values[x * self.monoid.len() + y]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    /// `x ↦ t(x, ε)`.
    pub fn extract_length(&self) -> Vec<V> {
        let e = self.monoid.neutral();
        self.monoid.elements().map(|x| self.get(x, e).clone()).collect()
    }

    /// Entrywise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// Zero only on the diagonal.
    pub fn is_faithful(&self) -> bool {
        let n = self.monoid.len();
        (0..n).all(|x| (0..n).all(|y| x == y || !self.get(x, y).is_zero()))
    }
}

/// A random monotone length function on `m`: integer values drawn in
/// `0..=max_value`, pushed up along the order, kept only if subadditive.
/// Falls back to the discrete length (1 off the neutral element) when no
/// attempt succeeds.
pub fn random_monotone_length(m: &Arc<Monoid>, max_value: i64, seed: u64) -> LengthFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = m.neutral();
    for _ in 0..256 {
        let raw: Vec<i64> = m
            .elements()
            .map(|x| if x == e { 0 } else { rng.gen_range(0..=max_value) })
            .collect();
        let values: Vec<Rational> = m
            .elements()
            .map(|x| {
                let v = m.elements().filter(|&y| m.leq(y, x)).map(|y| raw[y]).max().unwrap_or(0);
                crate::num::int(v)
            })
            .collect();
        if length_violations(m, &values, Mode::Monotone).is_empty() {
            return LengthFn::new_unchecked(Arc::clone(m), values, Mode::Monotone);
        }
    }
    let values = m.elements().map(|x| crate::num::int(i64::from(x != e))).collect();
    validate_length(m, values, Mode::Monotone).expect("the discrete length is a length function")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::{int, ratio};

    #[test]
    fn counting_measure_is_monotone() {
        let l = fixtures::fix_p2();
        assert_eq!(l.mode(), Mode::Monotone);
        assert_eq!(l.values(), &[int(0), int(1), int(1), int(2)]);
    }

    #[test]
    fn neutral_must_be_zero() {
        let m = Arc::new(crate::monoid::free_semilattice(2).unwrap());
        let err = validate_length(&m, vec![int(1), int(1), int(1), int(2)], Mode::Monotone).unwrap_err();
        let LengthError::Invalid(v) = err else { panic!() };
        assert!(v.contains(&LengthViolation::NeutralNonzero));
    }

    #[test]
    fn violations_carry_witnesses() {
        let m = Arc::new(crate::monoid::free_semilattice(2).unwrap());
        let err = validate_length(&m, vec![int(0), int(-1), int(1), int(5)], Mode::Monotone).unwrap_err();
        let LengthError::Invalid(v) = err else { panic!() };
        assert!(v.contains(&LengthViolation::Negative { x: "{1}".into() }));
        let err = validate_length(&m, vec![int(0), int(1), int(1), int(5)], Mode::Monotone).unwrap_err();
        let LengthError::Invalid(v) = err else { panic!() };
        assert_eq!(v, vec![LengthViolation::NotSubadditive { x: "{1}".into(), y: "{2}".into() }]);
        let err = validate_length(&m, vec![int(0), int(3), int(1), int(2)], Mode::Monotone).unwrap_err();
        let LengthError::Invalid(v) = err else { panic!() };
        assert_eq!(v, vec![LengthViolation::NotMonotone { x: "{1}".into(), y: "{2}".into() }]);
        assert!(validate_length(&m, vec![int(0), int(3), int(1), int(2)], Mode::Nonmonotone).is_ok());
        assert_eq!(
            validate_length(&m, vec![int(0)], Mode::Monotone),
            Err(LengthError::WrongCount { expected: 4, got: 1 })
        );
    }

    #[test]
    fn fix_bad_is_a_monotone_length() {
        let l = fixtures::fix_bad();
        assert_eq!(l.mode(), Mode::Monotone);
        assert!(length_violations(l.monoid(), l.values(), Mode::Monotone).is_empty());
    }

    #[test]
    fn d_sigma_on_fix_p2() {
        let l = fixtures::fix_p2();
        assert_eq!(l.d_labels("{1}", "{2}").unwrap(), int(1));
        assert_eq!(l.sigma_labels("{1}", "{2}").unwrap(), int(2));
        let s2 = l.sigma_p_labels("{1}", "{2}", 2.0).unwrap();
        assert!((s2 - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(l.sigma_p(0, 1, 0.5), Err(LengthError::BadP(_))));
        assert!(l.d_labels("{7}", "{1}").is_err());
        let m = l.monoid();
        for x in m.elements() {
            assert_eq!(l.d(x, m.neutral()), *l.value(x));
            assert_eq!(l.sigma(x, m.neutral()), *l.value(x));
            assert!(l.sigma(x, x).is_zero());
        }
    }

    #[test]
    fn d_on_fix_bad() {
        let l = fixtures::fix_bad();
        assert_eq!(l.d_labels("{x}", "{z}").unwrap(), int(2));
        assert_eq!(l.d_labels("{x}", "{y}").unwrap(), int(0));
        assert_eq!(l.d_labels("{y}", "{z}").unwrap(), int(0));
    }

    #[test]
    fn delta_function() {
        let l = fixtures::fix_p2();
        let m = l.monoid();
        assert_eq!(l.delta_labels("{2}", "{1}").unwrap(), int(-1));
        for x in m.elements() {
            assert!(l.delta(m.neutral(), x).is_zero());
            for y in m.elements().filter(|&y| m.leq(y, x)) {
                assert!(l.delta(y, x).is_zero());
            }
        }
    }

    #[test]
    fn modes_agree_on_monotone_lengths() {
        let l = fixtures::fix_bad();
        let nm = l.with_mode(Mode::Nonmonotone).unwrap();
        assert_eq!(l.table(DistanceKind::D), nm.table(DistanceKind::D));
        assert_eq!(l.table(DistanceKind::Sigma), nm.table(DistanceKind::Sigma));
    }

    #[test]
    fn bar_operator() {
        let l = fixtures::fix_p2();
        assert_eq!(l.bar(), l);
        let m = l.monoid();
        let raw = validate_length(m, vec![int(0), int(3), int(1), int(2)], Mode::Nonmonotone).unwrap();
        let b = raw.bar();
        assert_eq!(b.value(m.index_of("{1}").unwrap()), &int(2));
        assert_eq!(b.value(m.top()), raw.value(m.top()));
        assert_eq!(b.mode(), Mode::Monotone);
    }

    #[test]
    fn table_shapes() {
        let l = fixtures::fix_p2();
        let t = l.table(DistanceKind::D);
        assert_eq!(t.values().len(), 16);
        for x in 0..4 {
            assert!(t.get(x, x).is_zero());
        }
        assert!(DistanceTable::new(Arc::clone(l.monoid()), vec![int(0); 3], TableKind::Custom).is_err());
        let mut v = t.values().to_vec();
        v[1] = int(9);
        assert!(matches!(
            DistanceTable::new(Arc::clone(l.monoid()), v, TableKind::Custom),
            Err(TableError::Asymmetric { .. })
        ));
        assert_eq!(t.extract_length(), l.values());
    }

    #[test]
    fn cone_combination() {
        let a = fixtures::fix_p2();
        let b = random_monotone_length(a.monoid(), 4, 3);
        let c = LengthFn::combine(&[(ratio(1, 2), &a), (int(3), &b)]).unwrap();
        let (sa, sb, sc) = (
            a.table(DistanceKind::Sigma),
            b.table(DistanceKind::Sigma),
            c.table(DistanceKind::Sigma),
        );
        for i in 0..16 {
            assert_eq!(sc.values()[i], ratio(1, 2) * &sa.values()[i] + int(3) * &sb.values()[i]);
        }
    }
}
