//! Exhaustive (or seeded-sampled) checks of the Δ-, second Δ-, ∇-, weak and
//! very weak ∇-inequalities, plus the order-monotonicity predicates on `δ`
//! and on the measure of intersection.
//!
//! Every failed flag carries the first witness tuple found, in lexicographic
//! order of the tuple (deterministic regardless of `jobs`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::length::{DistanceKind, DistanceTable, LengthFn, Mode};
use crate::monoid::{Elem, Monoid};
use crate::num::{Rational, Scaled, Weight};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    pub holds: bool,
    pub witness: Option<Vec<Elem>>,
}

impl Flag {
    fn from_witness(witness: Option<Vec<Elem>>) -> Flag {
        Flag { holds: witness.is_none(), witness }
    }
}

/// Which inequality a [`Flag`] refers to; used to re-evaluate witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// `t(x,z) ≤ t(x,y) + t(y,z)`, witness `[x, y, z]`.
    Delta,
    /// `|t(x,z) − t(z,y)| ≤ t(x,y)`, witness `[x, y, z]`.
    SecondDelta,
    /// `t(x∇y, a∇b) ≤ t(x,a) + t(y,b)`, witness `[x, y, a, b]`.
    Nabla,
    /// `t(x∇z, y∇z) ≤ t(x,y)`, witness `[x, y, z]`.
    WeakNabla,
    /// Weak ∇ restricted to `x ≤ y`, witness `[x, y, z]`.
    VeryWeakNabla,
}

impl Inequality {
    pub const ALL: [Inequality; 5] = [
        Inequality::Delta,
        Inequality::SecondDelta,
        Inequality::Nabla,
        Inequality::WeakNabla,
        Inequality::VeryWeakNabla,
    ];

    /// True when the tuple violates this inequality for `t`.
    pub fn violated_by<V: Weight>(self, t: &DistanceTable<V>, w: &[Elem]) -> bool {
        let m = t.monoid();
        let g = |a: Elem, b: Elem| t.get(a, b).clone();
        match self {
            Inequality::Delta => !g(w[0], w[2]).le_tol(&(g(w[0], w[1]) + g(w[1], w[2]))),
            Inequality::SecondDelta => {
                let (xz, zy, xy) = (g(w[0], w[2]), g(w[2], w[1]), g(w[0], w[1]));
                !(xz.le_tol(&(zy.clone() + xy.clone())) && zy.le_tol(&(xz + xy)))
            }
            Inequality::Nabla => {
                !g(m.join(w[0], w[1]), m.join(w[2], w[3])).le_tol(&(g(w[0], w[2]) + g(w[1], w[3])))
            }
            Inequality::WeakNabla => !g(m.join(w[0], w[2]), m.join(w[1], w[2])).le_tol(&g(w[0], w[1])),
            Inequality::VeryWeakNabla => {
                m.leq(w[0], w[1]) && !g(m.join(w[0], w[2]), m.join(w[1], w[2])).le_tol(&g(w[0], w[1]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricFlags {
    pub delta: Flag,
    pub second_delta: Flag,
    pub nabla: Flag,
    pub weak_nabla: Flag,
    pub very_weak_nabla: Flag,
}

impl MetricFlags {
    pub fn flag(&self, which: Inequality) -> &Flag {
        match which {
            Inequality::Delta => &self.delta,
            Inequality::SecondDelta => &self.second_delta,
            Inequality::Nabla => &self.nabla,
            Inequality::WeakNabla => &self.weak_nabla,
            Inequality::VeryWeakNabla => &self.very_weak_nabla,
        }
    }

    pub fn all_hold(&self) -> bool {
        Inequality::ALL.iter().all(|&i| self.flag(i).holds)
    }
}

/// Result of [`check_inequalities`].
///
/// In nonmonotone mode only the `d` flags are evaluated; the `σ` flags and
/// the two monotonicity predicates are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InequalityReport {
    pub mode: Mode,
    pub d: MetricFlags,
    pub sigma: Option<MetricFlags>,
    /// `a ≤ x ⇒ δ_y(a) ≤ δ_y(x)`, witness `[a, x, y]`.
    pub delta_increasing: Option<Flag>,
    /// `a ≤ x, b ≤ y ⇒ ζ(a∩b) ≤ ζ(x∩y)`, witness `[a, b, x, y]`.
    pub intersection_increasing: Option<Flag>,
    pub sampled: bool,
}

impl InequalityReport {
    /// The six equivalent conditions, in order: very weak ∇ for `d`, very
    /// weak ∇ for `σ`, `δ` increasing, intersection increasing, Δ for `σ`,
    /// ∇ for `σ`.
    pub fn equivalence_flags(&self) -> Option<[bool; 6]> {
        let sigma = self.sigma.as_ref()?;
        Some([
            self.d.very_weak_nabla.holds,
            sigma.very_weak_nabla.holds,
            self.delta_increasing.as_ref()?.holds,
            self.intersection_increasing.as_ref()?.holds,
            sigma.delta.holds,
            sigma.nabla.holds,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Monoids with more elements than this are checked on random tuples.
    pub sample_above: usize,
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { sample_above: 64, samples: 100_000, seed: 0, jobs: 1 }
    }
}

pub fn check_inequalities(l: &LengthFn) -> InequalityReport {
    check_inequalities_with(l, &CheckOptions::default())
}

pub fn check_inequalities_with(l: &LengthFn, opts: &CheckOptions) -> InequalityReport {
    let m = l.monoid();
    let sampled = m.len() > opts.sample_above;
    let d = check_table_with(&l.table(DistanceKind::D), opts);
    if l.mode() == Mode::Nonmonotone {
        return InequalityReport {
            mode: l.mode(),
            d,
            sigma: None,
            delta_increasing: None,
            intersection_increasing: None,
            sampled,
        };
    }
    let sigma = check_table_with(&l.table(DistanceKind::Sigma), opts);
    let (delta_increasing, intersection_increasing) = match Scaled::new(l.values()) {
        Some(s) => order_flags(m, &s.values, opts),
        None => order_flags(m, l.values(), opts),
    };
    InequalityReport {
        mode: l.mode(),
        d,
        sigma: Some(sigma),
        delta_increasing: Some(delta_increasing),
        intersection_increasing: Some(intersection_increasing),
        sampled,
    }
}

pub fn check_table(t: &DistanceTable) -> MetricFlags {
    check_table_with(t, &CheckOptions::default())
}

/// Checks a rational table, running on scaled integers when they fit.
pub fn check_table_with(t: &DistanceTable, opts: &CheckOptions) -> MetricFlags {
    match Scaled::new(t.values()) {
        Some(s) => metric_flags(t.monoid(), &s.values, opts),
        None => metric_flags(t.monoid(), t.values(), opts),
    }
}

/// Checks a table of any weight type (e.g. float `σ_p` tables).
pub fn check_weight_table<V: Weight + Send + Sync>(t: &DistanceTable<V>, opts: &CheckOptions) -> MetricFlags {
    metric_flags(t.monoid(), t.values(), opts)
}

fn metric_flags<V: Weight + Send + Sync>(m: &Monoid, v: &[V], opts: &CheckOptions) -> MetricFlags {
    let n = m.len();
    let g = |a: Elem, b: Elem| &v[a * n + b];
    let sum = |a: &V, b: &V| a.clone() + b.clone();
    let delta = |x: Elem, y: Elem, z: Elem| g(x, z).le_tol(&sum(g(x, y), g(y, z)));
    let second = |x: Elem, y: Elem, z: Elem| {
        g(x, z).le_tol(&sum(g(z, y), g(x, y))) && g(z, y).le_tol(&sum(g(x, z), g(x, y)))
    };
    let weak = |x: Elem, y: Elem, z: Elem| g(m.join(x, z), m.join(y, z)).le_tol(g(x, y));
    let very_weak = |x: Elem, y: Elem, z: Elem| !m.leq(x, y) || weak(x, y, z);
    let nabla = |x: Elem, y: Elem, a: Elem, b: Elem| g(m.join(x, y), m.join(a, b)).le_tol(&sum(g(x, a), g(y, b)));
    MetricFlags {
        delta: Flag::from_witness(search3(n, opts, delta)),
        second_delta: Flag::from_witness(search3(n, opts, second)),
        nabla: Flag::from_witness(search4(n, opts, nabla)),
        weak_nabla: Flag::from_witness(search3(n, opts, weak)),
        very_weak_nabla: Flag::from_witness(search3(n, opts, very_weak)),
    }
}

fn order_flags<V: Weight + Send + Sync>(m: &Monoid, l: &[V], opts: &CheckOptions) -> (Flag, Flag) {
    let n = m.len();
    let delta = |y: Elem, x: Elem| l[x].clone() - l[m.join(x, y)].clone();
    let inter = |a: Elem, b: Elem| l[a].clone() + l[b].clone() - l[m.join(a, b)].clone();
    let delta_inc = |a: Elem, x: Elem, y: Elem| !m.leq(a, x) || delta(y, a).le_tol(&delta(y, x));
    let inter_inc =
        |a: Elem, b: Elem, x: Elem, y: Elem| !(m.leq(a, x) && m.leq(b, y)) || inter(a, b).le_tol(&inter(x, y));
    (
        Flag::from_witness(search3(n, opts, delta_inc)),
        Flag::from_witness(search4(n, opts, inter_inc)),
    )
}

/// First `(x, y, z)` in lexicographic order with `!ok(x, y, z)`.
fn search3<F>(n: usize, opts: &CheckOptions, ok: F) -> Option<Vec<Elem>>
where
    F: Fn(Elem, Elem, Elem) -> bool + Sync,
{
    if n > opts.sample_above {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        return (0..opts.samples)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
            .find(|&(x, y, z)| !ok(x, y, z))
            .map(|(x, y, z)| vec![x, y, z]);
    }
    first_outer(n, opts.jobs, |x| {
        for y in 0..n {
            for z in 0..n {
                if !ok(x, y, z) {
                    return Some(vec![x, y, z]);
                }
            }
        }
        None
    })
}

fn search4<F>(n: usize, opts: &CheckOptions, ok: F) -> Option<Vec<Elem>>
where
    F: Fn(Elem, Elem, Elem, Elem) -> bool + Sync,
{
    if n > opts.sample_above {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
        return (0..opts.samples)
            .map(|_| [0; 4].map(|_: usize| rng.gen_range(0..n)))
            .find(|t| !ok(t[0], t[1], t[2], t[3]))
            .map(|t| t.to_vec());
    }
    first_outer(n, opts.jobs, |x| {
        for y in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if !ok(x, y, a, b) {
                        return Some(vec![x, y, a, b]);
                    }
                }
            }
        }
        None
    })
}

/// Runs `probe` over `0..n` split into contiguous blocks across `jobs`
/// threads and returns the result for the smallest index that has one.
pub(crate) fn first_outer<F>(n: usize, jobs: usize, probe: F) -> Option<Vec<Elem>>
where
    F: Fn(Elem) -> Option<Vec<Elem>> + Sync,
{
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).find_map(&probe);
    }
    let chunk = n.div_ceil(jobs);
    let probe = &probe;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| s.spawn(move || (j * chunk..((j + 1) * chunk).min(n)).find_map(probe)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check worker panicked"))
            .find(Option::is_some)
            .flatten()
    })
}

/// Re-evaluates a `δ`-increasing witness `[a, x, y]`.
pub fn delta_increasing_violated(l: &LengthFn, w: &[Elem]) -> bool {
    let m = l.monoid();
    m.leq(w[0], w[1]) && l.delta(w[2], w[0]) > l.delta(w[2], w[1])
}

/// Re-evaluates an intersection-increasing witness `[a, b, x, y]`.
pub fn intersection_increasing_violated(l: &LengthFn, w: &[Elem]) -> bool {
    let m = l.monoid();
    let inter = |a: Elem, b: Elem| -> Rational { l.value(a) + l.value(b) - l.value(m.join(a, b)) };
    m.leq(w[0], w[2]) && m.leq(w[1], w[3]) && inter(w[0], w[1]) > inter(w[2], w[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn labels(m: &Monoid, w: &[Elem]) -> Vec<String> {
        w.iter().map(|&x| m.label(x).to_string()).collect()
    }

    #[test]
    fn counting_measure_satisfies_everything() {
        let r = check_inequalities(&fixtures::fix_p2());
        assert!(r.d.all_hold());
        assert!(r.sigma.as_ref().unwrap().all_hold());
        assert_eq!(r.equivalence_flags(), Some([true; 6]));
        assert!(!r.sampled);
    }

    #[test]
    fn fix_bad_breaks_delta_with_the_expected_witness() {
        let l = fixtures::fix_bad();
        let r = check_inequalities(&l);
        let m = l.monoid();
        assert!(!r.d.delta.holds);
        let w = r.d.delta.witness.clone().unwrap();
        assert!(Inequality::Delta.violated_by(&l.table(DistanceKind::D), &w));
        // First witness in lexicographic index order.
        assert_eq!(labels(m, &w), ["{x}", "{y}", "{z}"]);
        assert_eq!(r.equivalence_flags(), Some([false; 6]));
        assert!(!r.d.nabla.holds);
    }

    #[test]
    fn witnesses_re_evaluate() {
        let l = fixtures::fix_bad();
        let r = check_inequalities(&l);
        for (flags, kind) in [(&r.d, DistanceKind::D), (r.sigma.as_ref().unwrap(), DistanceKind::Sigma)] {
            let t = l.table(kind);
            for i in Inequality::ALL {
                let f = flags.flag(i);
                assert_eq!(f.holds, f.witness.is_none());
                if let Some(w) = &f.witness {
                    assert!(i.violated_by(&t, w), "{i:?} witness {w:?} does not violate");
                }
            }
        }
        let w = r.delta_increasing.unwrap().witness.unwrap();
        assert!(delta_increasing_violated(&l, &w));
        let w = r.intersection_increasing.unwrap().witness.unwrap();
        assert!(intersection_increasing_violated(&l, &w));
    }

    #[test]
    fn nonmonotone_mode_refuses_the_equivalence_flags() {
        let l = fixtures::fix_bad().with_mode(Mode::Nonmonotone).unwrap();
        let r = check_inequalities(&l);
        assert!(r.sigma.is_none() && r.delta_increasing.is_none() && r.intersection_increasing.is_none());
        assert_eq!(r.equivalence_flags(), None);
        assert!(!r.d.delta.holds);
    }

    #[test]
    fn parallel_search_is_deterministic() {
        let l = fixtures::fix_bad();
        let serial = check_inequalities(&l);
        for jobs in [2, 3, 8] {
            let par = check_inequalities_with(&l, &CheckOptions { jobs, ..Default::default() });
            assert_eq!(par, serial);
        }
    }

    #[test]
    fn sampled_mode_above_threshold() {
        let l = fixtures::fix_bad();
        let r = check_inequalities_with(&l, &CheckOptions { sample_above: 4, samples: 20_000, ..Default::default() });
        assert!(r.sampled);
        assert!(!r.d.delta.holds);
        let w = r.d.delta.witness.unwrap();
        assert!(Inequality::Delta.violated_by(&l.table(DistanceKind::D), &w));
    }

    #[test]
    fn float_tables_use_tolerance() {
        let l = fixtures::fix_p2();
        let t = l.sigma_p_table(2.0).unwrap();
        let f = check_weight_table(&t, &CheckOptions::default());
        assert!(f.delta.holds);
    }
}
