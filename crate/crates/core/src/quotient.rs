//! The metric quotient of a pseudometric that satisfies the ∇-inequality.

use std::sync::Arc;

use crate::inequality::check_table;
use crate::length::{validate_length, DistanceKind, DistanceTable, LengthFn, Mode, TableKind};
use crate::monoid::{Elem, Monoid};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuotientError {
    #[error("not a pseudometric: triangle inequality fails at {0:?}")]
    NotPseudometric(Vec<String>),
    #[error("nabla inequality fails at {0:?}")]
    NoNablaInequality(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct QuotientResult {
    /// Elements of each class, ascending; classes ordered by their first element.
    pub classes: Vec<Vec<Elem>>,
    /// Monoid on the classes, labelled by the lexicographically least member.
    pub quotient: Arc<Monoid>,
    pub metric: DistanceTable,
    /// Element ↦ class index.
    pub projection: Vec<usize>,
    /// `ℓ̌([x]) = ď([x], [ε])`.
    pub induced_length: LengthFn,
    /// Joins and distances do not depend on the chosen representatives.
    pub well_defined: bool,
}

impl QuotientResult {
    /// `d_{ℓ̌}` equals `ď`.
    pub fn induced_length_matches(&self) -> bool {
        self.induced_length.mode() == Mode::Monotone && self.induced_length.table(DistanceKind::D) == self.metric
    }
}

pub fn quotient(t: &DistanceTable) -> Result<QuotientResult, QuotientError> {
    let m = t.monoid();
    let labels = |w: &[Elem]| w.iter().map(|&x| m.label(x).to_string()).collect::<Vec<_>>();
    let flags = check_table(t);
    if let Some(w) = &flags.delta.witness {
        return Err(QuotientError::NotPseudometric(labels(w)));
    }
    if let Some(w) = &flags.nabla.witness {
        return Err(QuotientError::NoNablaInequality(labels(w)));
    }

    let n = m.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for x in 0..n {
        for y in x + 1..n {
            if num_traits::Zero::is_zero(t.get(x, y)) {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut projection = vec![0; n];
    let mut classes: Vec<Vec<Elem>> = Vec::new();
    let mut root_class = vec![usize::MAX; n];
    for x in 0..n {
        let r = find(&mut parent, x);
        if root_class[r] == usize::MAX {
            root_class[r] = classes.len();
            classes.push(Vec::new());
        }
        projection[x] = root_class[r];
        classes[root_class[r]].push(x);
    }
    let reps: Vec<Elem> = classes
        .iter()
        .map(|c| *c.iter().min_by_key(|&&x| m.label(x)).expect("classes are nonempty"))
        .collect();
    let k = classes.len();
    let table: Vec<Elem> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| projection[m.join(reps[i], reps[j])])
        .collect();
    let qlabels = reps.iter().map(|&r| m.label(r).to_string()).collect();
    let quotient = Arc::new(
        Monoid::from_table(qlabels, projection[m.neutral()], table).expect("join passes to the quotient"),
    );
    let metric_values = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| t.get(reps[i], reps[j]).clone()).collect();
    let metric = DistanceTable::from_parts(Arc::clone(&quotient), metric_values, TableKind::Custom);

    let well_defined = (0..n).all(|x| {
        (0..n).all(|y| {
            let (cx, cy) = (projection[x], projection[y]);
            projection[m.join(x, y)] == quotient.join(cx, cy) && t.get(x, y) == metric.get(cx, cy)
        })
    });
    let e = quotient.neutral();
    let induced: Vec<_> = (0..k).map(|i| metric.get(i, e).clone()).collect();
    let induced_length = validate_length(&quotient, induced.clone(), Mode::Monotone)
        .or_else(|_| validate_length(&quotient, induced, Mode::Nonmonotone))
        .expect("distance to the neutral class is a length function under the nabla inequality");
    Ok(QuotientResult { classes, quotient, metric, projection, induced_length, well_defined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixpoint::{ideal_length, FixpointOptions, Start, Variant};
    use crate::fixtures::{fix_bad, fix_p2};
    use crate::num::Rational;

    #[test]
    fn faithful_input_gives_identity() {
        let d = fix_p2().table(DistanceKind::D);
        let q = quotient(&d).unwrap();
        assert_eq!(q.classes.len(), 4);
        assert!(q.metric.is_faithful() && q.well_defined && q.induced_length_matches());
        assert_eq!(q.metric.values(), d.values());
    }

    #[test]
    fn fix_bad_limit_collapses() {
        let r = ideal_length(Start::Length(fix_bad()), Variant::D, &FixpointOptions::default()).unwrap();
        let q = quotient(&r.table).unwrap();
        assert_eq!(q.classes, vec![vec![0], vec![1, 2, 3, 4, 5, 6, 7]]);
        assert_eq!(q.quotient.labels(), &["{}", "{x,y,z}"]);
        assert!(q.metric.is_faithful() && q.well_defined && q.induced_length_matches());
        let again = quotient(&q.metric).unwrap();
        assert_eq!(again.classes.len(), 2);
    }

    #[test]
    fn zero_table_is_one_class() {
        let m = fix_p2().monoid().clone();
        let q = quotient(&DistanceTable::<Rational>::zero(m)).unwrap();
        assert_eq!(q.quotient.len(), 1);
        assert!(q.well_defined);
    }

    #[test]
    fn rejects_non_pseudometrics() {
        let d = fix_bad().table(DistanceKind::D);
        assert_eq!(
            quotient(&d).unwrap_err(),
            QuotientError::NotPseudometric(vec!["{x}".into(), "{y}".into(), "{z}".into()])
        );
    }
}
