//! Forced Δ-closure `d̃`, forced ∇-closure `d̂`, their composite, and
//! brute-force oracles for both.

use std::sync::Arc;

use crate::length::{DistanceTable, TableKind};
use crate::monoid::{Elem, Monoid};
use crate::num::{Rational, Scaled, Weight};

/// Brute-force oracles refuse monoids larger than this.
pub const BRUTE_FORCE_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClosureError {
    #[error("instance too large for brute force: {size} elements (max {BRUTE_FORCE_MAX})")]
    InstanceTooLarge { size: usize },
}

/// Runs `kernel` on the scaled `i128` copy of `values` when it fits,
/// otherwise on the rationals themselves.
fn with_fast_path(
    values: &[Rational],
    kernel_i: impl FnOnce(&mut Vec<i128>),
    kernel_r: impl FnOnce(&mut Vec<Rational>),
) -> Vec<Rational> {
    match Scaled::new(values) {
        Some(mut s) => {
            kernel_i(&mut s.values);
            s.values.iter().map(|&v| s.unscale(v)).collect()
        }
        None => {
            let mut v = values.to_vec();
            kernel_r(&mut v);
            v
        }
    }
}

/// Floyd–Warshall on the complete graph weighted by `v`.
pub(crate) fn shortest_paths<V: Weight>(n: usize, v: &mut [V]) {
    for k in 0..n {
        for i in 0..n {
            let ik = v[i * n + k].clone();
            for j in 0..n {
                let c = ik.clone() + v[k * n + j].clone();
                if c < v[i * n + j] {
                    v[i * n + j] = c;
                }
            }
        }
    }
}

/// Binary relaxation `v(x₁∇x₂, y₁∇y₂) ← min(·, v(x₁,y₁) + v(x₂,y₂))`,
/// swept in a fixed order until no cell changes.
pub(crate) fn join_relax<V: Weight>(m: &Monoid, v: &mut [V]) {
    let n = m.len();
    let mut changed = true;
    while changed {
        changed = false;
        for x1 in 0..n {
            for y1 in 0..n {
                let a = v[x1 * n + y1].clone();
                for x2 in x1..n {
                    let jx = m.join(x1, x2);
                    for y2 in 0..n {
                        let cell = jx * n + m.join(y1, y2);
                        let c = a.clone() + v[x2 * n + y2].clone();
                        if c < v[cell] {
                            v[cell] = c;
                            changed = true;
                        }
                    }
                }
            }
        }
    }
}

/// `d̃`: the infimum over chains `x, a₁, …, aₙ, y` of the summed table values.
pub fn delta_closure(t: &DistanceTable) -> DistanceTable {
    let n = t.monoid().len();
    let values = with_fast_path(t.values(), |v| shortest_paths(n, v), |v| shortest_paths(n, v));
    DistanceTable::from_parts(Arc::clone(t.monoid()), values, TableKind::ClosedDelta)
}

/// `d̂`: the infimum over decompositions `x = ∇xᵢ`, `y = ∇yᵢ` of `Σ t(xᵢ,yᵢ)`.
pub fn nabla_closure(t: &DistanceTable) -> DistanceTable {
    let m = t.monoid();
    let values = with_fast_path(t.values(), |v| join_relax(m, v), |v| join_relax(m, v));
    DistanceTable::from_parts(Arc::clone(m), values, TableKind::ClosedNabla)
}

/// `d̃̂`: the ∇-closure followed by the Δ-closure. The result satisfies both.
pub fn tiha(t: &DistanceTable) -> DistanceTable {
    delta_closure(&nabla_closure(t)).with_kind(TableKind::ClosedBoth)
}

/// The other order, Δ first. Kept for comparison only.
pub fn tilde_then_hat(t: &DistanceTable) -> DistanceTable {
    nabla_closure(&delta_closure(t)).with_kind(TableKind::Custom)
}

/// Both closures for tables of any [`Weight`], e.g. float `σ_p` tables.
pub fn tiha_weight<V: Weight>(t: &DistanceTable<V>) -> DistanceTable<V> {
    let m = t.monoid();
    let mut v = t.values().to_vec();
    join_relax(m, &mut v);
    shortest_paths(m.len(), &mut v);
    DistanceTable::from_parts(Arc::clone(m), v, TableKind::ClosedBoth)
}

/// Direct enumeration of both infima. Chains use at most `max_chain`
/// distinct intermediate points (default: all of them); decompositions use
/// sets of at most `max_parts` distinct pairs (default: twice the largest
/// irredundant family, which no minimal decomposition can exceed).
pub fn brute_force_closures(
    t: &DistanceTable,
    max_chain: Option<usize>,
    max_parts: Option<usize>,
) -> Result<(DistanceTable, DistanceTable), ClosureError> {
    let m = t.monoid();
    let n = m.len();
    if n > BRUTE_FORCE_MAX {
        return Err(ClosureError::InstanceTooLarge { size: n });
    }
    let max_chain = max_chain.unwrap_or(n.saturating_sub(2));
    let max_parts = max_parts.unwrap_or(2 * m.max_irredundant().max(1));

    let mut tilde = t.values().to_vec();
    for x in 0..n {
        for y in 0..n {
            let mut used = vec![false; n];
            used[x] = true;
            used[y] = true;
            chains(t, y, x, Rational::from_integer(0.into()), max_chain, &mut used, &mut tilde[x * n + y]);
        }
    }

    let e = m.neutral();
    let pairs: Vec<(Elem, Elem)> =
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&p| p != (e, e)).collect();
    let mut hat: Vec<Option<Rational>> = vec![None; n * n];
    hat[e * n + e] = Some(Rational::from_integer(0.into()));
    subsets(m, t, &pairs, 0, (e, e), Rational::from_integer(0.into()), max_parts, &mut hat);
    let hat = hat.into_iter().map(|v| v.expect("every pair decomposes as itself")).collect();

    Ok((
        DistanceTable::from_parts(Arc::clone(m), tilde, TableKind::ClosedDelta),
        DistanceTable::from_parts(Arc::clone(m), hat, TableKind::ClosedNabla),
    ))
}

#[allow(clippy::too_many_arguments)]
fn chains(
    t: &DistanceTable,
    y: Elem,
    at: Elem,
    cost: Rational,
    left: usize,
    used: &mut [bool],
    best: &mut Rational,
) {
    let direct = &cost + t.get(at, y);
    if direct < *best {
        *best = direct;
    }
    if left == 0 {
        return;
    }
    for a in 0..used.len() {
        if used[a] {
            continue;
        }
        used[a] = true;
        chains(t, y, a, &cost + t.get(at, a), left - 1, used, best);
        used[a] = false;
    }
}

#[allow(clippy::too_many_arguments)]
fn subsets(
    m: &Monoid,
    t: &DistanceTable,
    pairs: &[(Elem, Elem)],
    from: usize,
    acc: (Elem, Elem),
    cost: Rational,
    left: usize,
    best: &mut [Option<Rational>],
) {
    if left == 0 {
        return;
    }
    let n = m.len();
    for (i, &(x, y)) in pairs.iter().enumerate().skip(from) {
        let next = (m.join(acc.0, x), m.join(acc.1, y));
        let c = &cost + t.get(x, y);
        let cell = &mut best[next.0 * n + next.1];
        if cell.as_ref().is_none_or(|b| c < *b) {
            *cell = Some(c.clone());
        }
        subsets(m, t, pairs, i + 1, next, c, left - 1, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fix_bad, fix_p2};
    use crate::inequality::check_table;
    use crate::length::DistanceKind;
    use crate::num::int;

    #[test]
    fn metric_input_is_unchanged() {
        let d = fix_p2().table(DistanceKind::D);
        assert_eq!(delta_closure(&d), d);
        assert_eq!(nabla_closure(&d), d);
        assert_eq!(tiha(&d), d);
    }

    #[test]
    fn fix_bad_chain_collapses() {
        let l = fix_bad();
        let m = l.monoid();
        let d = l.table(DistanceKind::D);
        let dt = delta_closure(&d);
        let (x, z) = (m.index_of("{x}").unwrap(), m.index_of("{z}").unwrap());
        assert_eq!(dt.get(x, z), &int(0));
        let (bt, _) = brute_force_closures(&d, None, Some(1)).unwrap();
        assert_eq!(bt, dt);
        let th = tiha(&d);
        assert!(th.le(&d));
        let flags = check_table(&th);
        assert!(flags.delta.holds && flags.nabla.holds);
        assert_eq!(tiha(&th), th);
    }

    #[test]
    fn hat_matches_brute_force_on_custom_table() {
        let l = fix_p2();
        let m = Arc::clone(l.monoid());
        let (e, a, b, ab) = (0, 1, 2, 3);
        let mut v = vec![int(0); 16];
        let mut set = |x: usize, y: usize, w: i64| {
            v[x * 4 + y] = int(w);
            v[y * 4 + x] = int(w);
        };
        set(ab, a, 5);
        set(b, a, 1);
        set(e, a, 2);
        set(e, b, 3);
        set(e, ab, 7);
        set(a, b, 1);
        set(ab, b, 4);
        let t = DistanceTable::new(m, v, TableKind::Custom).unwrap();
        let h = nabla_closure(&t);
        assert!(h.get(ab, a) <= &(t.get(a, a) + t.get(b, a)));
        assert_eq!(h.get(ab, a), &int(1));
        let (_, bh) = brute_force_closures(&t, None, None).unwrap();
        assert_eq!(bh, h);
        assert!(check_table(&h).nabla.holds);
    }

    #[test]
    fn two_element_monoid_is_fixed() {
        let m = Arc::new(crate::monoid::free_semilattice(1).unwrap());
        let t = DistanceTable::new(m, vec![int(0), int(3), int(3), int(0)], TableKind::Custom).unwrap();
        assert_eq!(delta_closure(&t), t);
        assert_eq!(nabla_closure(&t), t);
        let (bt, bh) = brute_force_closures(&t, None, None).unwrap();
        assert_eq!((bt, bh), (t.clone(), t));
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let m = Arc::new(crate::monoid::free_semilattice(4).unwrap());
        let t = DistanceTable::<Rational>::zero(m);
        assert_eq!(
            brute_force_closures(&t, None, None).unwrap_err(),
            ClosureError::InstanceTooLarge { size: 16 }
        );
    }

    #[test]
    fn rational_fallback_agrees_with_fast_path() {
        let d = fix_bad().table(DistanceKind::D);
        let n = d.monoid().len();
        let mut slow = d.values().to_vec();
        join_relax(d.monoid(), &mut slow);
        shortest_paths(n, &mut slow);
        assert_eq!(tiha(&d).values(), &slow[..]);
    }
}
