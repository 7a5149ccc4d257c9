use std::sync::Arc;

use joinmetric::boolean::{zeta, BoolExpr};
use joinmetric::closure::{brute_force_closures, delta_closure, nabla_closure, tiha};
use joinmetric::fixpoint::{ideal_length, FixpointOptions, Start, Variant};
use joinmetric::hom::{
    derived_lengths, ell_prime, hom_join, object_from_length, paired_product_flags, product_closure,
    product_inequality_witness, Category, Ext, ENUMERATION_LIMIT,
};
use joinmetric::inequality::{check_inequalities, check_table};
use joinmetric::length::{random_monotone_length, validate_length, Mode};
use joinmetric::monoid::{random_submonoid, Monoid};
use joinmetric::num::{int, Rational};
use joinmetric::quotient::quotient;
use joinmetric::set_model::{random_monotone_instance, random_set_instance};
use joinmetric::{DistanceKind, DistanceTable, LengthFn, TableKind};
use num_traits::Signed;
use proptest::prelude::*;

fn monotone() -> impl Strategy<Value = LengthFn> {
    any::<u64>().prop_map(|s| random_monotone_instance(s, 8).1)
}

/// Any monotone length, set-model or not.
fn any_length() -> impl Strategy<Value = LengthFn> {
    prop_oneof![monotone(), any::<u64>().prop_map(|s| random_set_instance(s, 5, 16).length)]
}

fn small_monoid() -> impl Strategy<Value = Arc<Monoid>> {
    (1usize..=3, 2usize..=8, any::<u64>()).prop_map(|(g, k, s)| Arc::new(random_submonoid(g, k, s)))
}

/// Symmetric, nilpotent, nonnegative integer table on a monoid of at most 8 elements.
fn custom_table() -> impl Strategy<Value = DistanceTable> {
    small_monoid().prop_flat_map(|m| {
        let n = m.len();
        proptest::collection::vec(0i64..6, n * n).prop_map(move |raw| {
            let mut v = vec![int(0); n * n];
            for x in 0..n {
                for y in x + 1..n {
                    v[x * n + y] = int(raw[x * n + y]);
                    v[y * n + x] = int(raw[x * n + y]);
                }
            }
            DistanceTable::new(Arc::clone(&m), v, TableKind::Custom).unwrap()
        })
    })
}

fn at_most(a: &DistanceTable, b: &DistanceTable) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x <= y)
}

fn is_semimetric(t: &DistanceTable) -> bool {
    let n = t.monoid().len();
    (0..n).all(|x| t.get(x, x) == &int(0) && (0..n).all(|y| t.get(x, y) >= &int(0) && t.get(x, y) == t.get(y, x)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monoid_axioms_and_order(m in small_monoid()) {
        prop_assert!(m.axiom_violations().is_empty());
        prop_assert!(m.order().is_partial_order());
        for a in m.elements() {
            for b in m.elements() {
                let j = m.join(a, b);
                prop_assert!(m.leq(a, j) && m.leq(b, j));
                for u in m.elements() {
                    if m.leq(a, u) && m.leq(b, u) {
                        prop_assert!(m.leq(j, u));
                    }
                    for v in m.elements() {
                        if m.leq(a, u) && m.leq(b, v) {
                            prop_assert!(m.leq(j, m.join(u, v)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn length_bounds(l in monotone()) {
        let m = l.monoid();
        for x in m.elements() {
            for y in m.elements() {
                let (lx, ly, lj) = (l.value(x), l.value(y), l.value(m.join(x, y)));
                let hi = lx.max(ly);
                prop_assert!(hi <= lj);
                let (d, s) = (l.d(x, y), l.sigma(x, y));
                prop_assert!((lx - ly).abs() <= d && &d <= hi);
                prop_assert!(d <= s && s <= &d * int(2));
                let zero = d == int(0);
                prop_assert_eq!(zero, s == int(0));
                prop_assert_eq!(zero, lj == lx && lx == ly);
                let z = |a: usize, b: usize| zeta(&l, &BoolExpr::Atom(a).minus(BoolExpr::Atom(b))).unwrap();
                let (zxy, zyx) = (z(x, y), z(y, x));
                prop_assert_eq!(&d, &zxy.clone().max(zyx.clone()));
                prop_assert_eq!(&s, &(&zxy + &zyx));
            }
        }
    }

    #[test]
    fn comparable_pairs_are_additive(l in monotone()) {
        let m = l.monoid();
        for a in m.elements() {
            for b in m.elements().filter(|&b| m.leq(a, b)) {
                let diff = l.value(b) - l.value(a);
                prop_assert_eq!(&l.d(a, b), &diff);
                prop_assert_eq!(&l.sigma(a, b), &diff);
                for c in m.elements().filter(|&c| m.leq(b, c)) {
                    prop_assert_eq!(l.d(a, c), l.d(a, b) + l.d(b, c));
                    prop_assert_eq!(l.sigma(a, c), l.sigma(a, b) + l.sigma(b, c));
                }
            }
        }
    }

    #[test]
    fn six_conditions_agree(l in monotone()) {
        let r = check_inequalities(&l);
        let f = r.equivalence_flags().unwrap();
        prop_assert!(f.iter().all(|&b| b == f[0]));
        let sigma = r.sigma.as_ref().unwrap();
        prop_assert!(!sigma.delta.holds || r.d.delta.holds);
        prop_assert!(!r.d.nabla.holds || f[0]);
    }

    #[test]
    fn intersection_flag_matches_zeta(l in monotone()) {
        let m = l.monoid();
        let cap = |x: usize, y: usize| zeta(&l, &BoolExpr::Atom(x).and(BoolExpr::Atom(y))).unwrap();
        let mut increasing = true;
        for a in m.elements() {
            for x in m.elements().filter(|&x| m.leq(a, x)) {
                for b in m.elements() {
                    for y in m.elements().filter(|&y| m.leq(b, y)) {
                        increasing &= cap(a, b) <= cap(x, y);
                    }
                }
            }
        }
        prop_assert_eq!(check_inequalities(&l).intersection_increasing.unwrap().holds, increasing);
    }

    #[test]
    fn positive_cone(seed in any::<u64>(), a in 0i64..4, b in 0i64..4) {
        let (m, l1) = random_monotone_instance(seed, 8);
        let l2 = random_monotone_length(&m, 3, seed ^ 0x5555);
        let (a, b) = (int(a), int(b));
        let sum = LengthFn::combine(&[(a.clone(), &l1), (b.clone(), &l2)]).unwrap();
        prop_assert!(validate_length(&m, sum.values().to_vec(), Mode::Monotone).is_ok());
        let (s, s1, s2) = (sum.table(DistanceKind::Sigma), l1.table(DistanceKind::Sigma), l2.table(DistanceKind::Sigma));
        for i in 0..s.values().len() {
            prop_assert_eq!(&s.values()[i], &(&a * &s1.values()[i] + &b * &s2.values()[i]));
        }
    }

    #[test]
    fn closures_lower_and_preserve_shape(t in custom_table()) {
        for c in [delta_closure(&t), nabla_closure(&t), tiha(&t)] {
            prop_assert!(at_most(&c, &t));
            prop_assert!(is_semimetric(&c));
        }
        let f = check_table(&tiha(&t));
        prop_assert!(f.delta.holds && f.nabla.holds);
    }

    #[test]
    fn delta_closure_is_largest_below(t in custom_table(), cut in proptest::collection::vec(0i64..3, 64)) {
        // ρ := closure of a table below t satisfies Δ and ρ ≤ t
        let n = t.monoid().len();
        let mut lower = t.values().to_vec();
        for x in 0..n {
            for y in x + 1..n {
                let r = (&lower[x * n + y] - int(cut[(x * n + y) % 64])).max(int(0));
                lower[x * n + y] = r.clone();
                lower[y * n + x] = r;
            }
        }
        let rho = delta_closure(&DistanceTable::new(Arc::clone(t.monoid()), lower, TableKind::Custom).unwrap());
        prop_assert!(at_most(&rho, &delta_closure(&t)));
    }

    #[test]
    fn delta_closure_is_shortest_paths(t in custom_table()) {
        // min-plus squaring until stable
        let n = t.monoid().len();
        let mut v = t.values().to_vec();
        loop {
            let mut next = v.clone();
            for x in 0..n {
                for y in 0..n {
                    for k in 0..n {
                        let c = &v[x * n + k] + &v[k * n + y];
                        if c < next[x * n + y] {
                            next[x * n + y] = c;
                        }
                    }
                }
            }
            if next == v {
                break;
            }
            v = next;
        }
        let dt = delta_closure(&t);
        prop_assert_eq!(dt.values(), &v[..]);
    }

    #[test]
    fn nabla_closure_matches_brute_force(t in custom_table()) {
        let (bt, bh) = brute_force_closures(&t, None, None).unwrap();
        prop_assert_eq!(bt, delta_closure(&t));
        prop_assert_eq!(bh, nabla_closure(&t));
    }

    #[test]
    fn lower_bound_by_length_differences(l in any_length()) {
        let dt = delta_closure(&l.table(DistanceKind::D));
        let m = l.monoid();
        for x in m.elements() {
            for y in m.elements() {
                prop_assert!((l.value(x) - l.value(y)).abs() <= *dt.get(x, y));
            }
        }
    }

    #[test]
    fn ideal_length_limit(l in any_length()) {
        let r = ideal_length(Start::Length(l.clone()), Variant::D, &FixpointOptions::default()).unwrap();
        prop_assert!(r.trace.descending);
        prop_assert_eq!(&r.table, &r.length.table(DistanceKind::D));
        prop_assert_eq!(&tiha(&r.table), &r.table);
        let bar = r.length.bar();
        prop_assert_eq!(bar.values(), r.length.values());
        let again = ideal_length(Start::Length(r.length.clone()), Variant::D, &FixpointOptions::default()).unwrap();
        prop_assert_eq!(again.trace.iterations, 1);
        prop_assert_eq!(again.length.values(), r.length.values());

        let q = quotient(&r.table).unwrap();
        prop_assert!(q.well_defined);
        prop_assert!(q.induced_length_matches());
        prop_assert!(validate_length(&q.quotient, q.induced_length.values().to_vec(), Mode::Monotone).is_ok());
        let twice = quotient(&q.metric).unwrap();
        prop_assert_eq!(twice.classes.len(), q.classes.len());
    }

    #[test]
    fn set_model_is_exact(seed in any::<u64>()) {
        let sm = random_set_instance(seed, 6, 32);
        let l = &sm.length;
        for a in sm.monoid.elements() {
            for b in sm.monoid.elements() {
                prop_assert_eq!(l.d(a, b), sm.instance.oracle_d(a, b));
                prop_assert_eq!(l.sigma(a, b), sm.instance.oracle_sigma(a, b));
                let e = BoolExpr::Atom(a).and(BoolExpr::Atom(b).minus(BoolExpr::Atom(a).not()));
                if let Ok(o) = sm.instance.oracle_zeta(&e) {
                    prop_assert_eq!(zeta(l, &e).unwrap(), o);
                }
            }
        }
        let r = check_inequalities(l);
        prop_assert!(r.d.all_hold() && r.sigma.unwrap().all_hold());
        let fixed = ideal_length(Start::Length(l.clone()), Variant::D, &FixpointOptions::default()).unwrap();
        prop_assert_eq!(fixed.trace.iterations, 1);
        prop_assert_eq!(fixed.length.values(), l.values());
    }
}

fn tiny_category(seeds: &[u64]) -> Category {
    let objects = seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| object_from_length(&format!("o{i}"), &random_monotone_instance(s, 4).1))
        .collect();
    Category::enumerate(objects, ENUMERATION_LIMIT).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hom_laws(seeds in proptest::collection::vec(any::<u64>(), 1..=2)) {
        let cat = tiny_category(&seeds);
        prop_assert!(cat.distribution_laws_hold());
        for hs in &cat.homsets {
            prop_assert!(hs.monoid.axiom_violations().is_empty());
            let (ds, dq) = (&cat.objects[hs.source].distance, &cat.objects[hs.target].distance);
            for u in &hs.homs {
                for v in &hs.homs {
                    let j = hom_join(u, v).unwrap();
                    if let (Ext::Finite(a), Ext::Finite(b)) = (ell_prime(u, ds, dq), ell_prime(v, ds, dq)) {
                        prop_assert!(ell_prime(&j, ds, dq) <= Ext::Finite(a + b));
                    }
                }
            }
        }
    }

    #[test]
    fn product_closure_properties(seeds in proptest::collection::vec(any::<u64>(), 1..=2)) {
        let cat = tiny_category(&seeds);
        let lengths = derived_lengths(&cat);
        let dot = product_closure(&cat, &lengths);
        for (a, b) in dot.iter().zip(&lengths.d) {
            prop_assert!(at_most(a, b));
        }
        prop_assert!(product_inequality_witness(&cat, &dot, &lengths.ell).is_none());
        let already = product_inequality_witness(&cat, &lengths.d, &lengths.ell).is_none();
        prop_assert_eq!(already, dot == lengths.d);
        let closed: Vec<DistanceTable> = dot.iter().map(tiha).collect();
        prop_assert!(product_inequality_witness(&cat, &closed, &lengths.ell).is_none());
        let (d_flag, s_flag) = paired_product_flags(&cat, &lengths.ell);
        prop_assert_eq!(d_flag, s_flag);
    }
}

#[test]
fn rationals_are_exact() {
    let third: Rational = Rational::new(1.into(), 3.into());
    assert_eq!(&third + &third + &third, int(1));
}
