//! Iterated projection of a length function onto an ideal one.
//!
//! One step: close the current table under ∇ and Δ, read off the length
//! `x ↦ d̃̂(x, ε)`, take its monotone envelope (skipped for the non-monotone
//! variant) and rebuild the table from it.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::closure::tiha;
use crate::inequality::check_table;
use crate::length::{bar_values, DistanceKind, DistanceTable, LengthFn, Mode};
use crate::num::{int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `d^{(n+1)} = d_{ℓ^{(n+1)}}`.
    D,
    /// `d^{(n+1)} = σ_{ℓ^{(n+1)}}`.
    Sigma,
    /// Non-monotone distances, no envelope.
    Nonmono,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::D => "d",
            Variant::Sigma => "sigma",
            Variant::Nonmono => "nonmono",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "d" => Ok(Variant::D),
            "sigma" => Ok(Variant::Sigma),
            "nonmono" => Ok(Variant::Nonmono),
            _ => Err(format!("unknown variant {s:?} (expected d, sigma or nonmono)")),
        }
    }
}

impl Variant {
    fn mode(self) -> Mode {
        match self {
            Variant::Nonmono => Mode::Nonmonotone,
            _ => Mode::Monotone,
        }
    }

    fn kind(self) -> DistanceKind {
        match self {
            Variant::Sigma => DistanceKind::Sigma,
            _ => DistanceKind::D,
        }
    }

    /// The table this variant builds from a length function.
    pub fn table_of(self, l: &LengthFn) -> DistanceTable {
        l.table(self.kind())
    }
}

/// Where an iteration starts.
#[derive(Debug, Clone)]
pub enum Start {
    Length(LengthFn),
    Table(DistanceTable),
}

#[derive(Debug, Clone)]
pub struct FixpointOptions {
    /// Also stop once no entry moves by `tol` or more. Exact repetition
    /// always stops the iteration.
    pub tol: Option<Rational>,
    pub max_iter: usize,
    /// Number of most recent steps kept in the trace.
    pub trace_window: usize,
}

impl Default for FixpointOptions {
    fn default() -> Self {
        FixpointOptions { tol: None, max_iter: 10_000, trace_window: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixpointError {
    #[error("no convergence within {0} iterations")]
    NotConverged(usize),
    #[error("variant {0} needs a monotone start length")]
    NeedsMonotone(Variant),
}

/// One iteration `d^{(n)} ↦ d^{(n+1)}`.
#[derive(Debug, Clone)]
pub struct Step {
    pub d: DistanceTable,
    pub tiha: DistanceTable,
    /// `ℓ^{(n+1)}`.
    pub length: Vec<Rational>,
    pub d_next: DistanceTable,
    pub max_change: Rational,
    /// Whether `d̃̂^{(n)}` is itself the table of its extracted length.
    pub tiha_is_length_table: bool,
}

#[derive(Debug, Clone)]
pub struct FixpointTrace {
    pub variant: Variant,
    pub iterations: usize,
    pub converged: bool,
    /// Steps dropped from the front because of the window.
    pub dropped: usize,
    pub steps: VecDeque<Step>,
    /// `ℓ^{(n+1)} ≤ ℓ̃̂^{(n)} ≤ ℓ^{(n)}` and `d^{(n+1)} ≤ d̃̂^{(n)} ≤ d^{(n)}` at every step.
    pub descending: bool,
}

#[derive(Debug, Clone)]
pub struct FixpointResult {
    pub length: LengthFn,
    pub table: DistanceTable,
    pub trace: FixpointTrace,
    /// Min and mean of `ℓ^∞(x)/ℓ(x)` over `x` with `ℓ(x) > 0`, when started
    /// from a length function.
    pub ratio_min_mean: Option<(Rational, Rational)>,
}

fn max_change(a: &DistanceTable, b: &DistanceTable) -> Rational {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).max().unwrap_or_else(Rational::zero)
}

fn le_all(a: &[Rational], b: &[Rational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn ideal_length(start: Start, variant: Variant, opts: &FixpointOptions) -> Result<FixpointResult, FixpointError> {
    let (mut d, start_length) = match start {
        Start::Length(l) => {
            if variant != Variant::Nonmono && l.mode() != Mode::Monotone {
                return Err(FixpointError::NeedsMonotone(variant));
            }
            let l = if variant == Variant::Nonmono { l.with_mode(Mode::Nonmonotone).expect("same values") } else { l };
            (variant.table_of(&l), Some(l))
        }
        Start::Table(t) => (t, None),
    };
    let m = Arc::clone(d.monoid());
    let mut trace = FixpointTrace {
        variant,
        iterations: 0,
        converged: false,
        dropped: 0,
        steps: VecDeque::new(),
        descending: true,
    };
    for _ in 0..opts.max_iter {
        let th = tiha(&d);
        let ext = th.extract_length();
        let next = match variant {
            Variant::Nonmono => ext.clone(),
            _ => bar_values(&m, &ext),
        };
        let l_next = LengthFn::new_unchecked(Arc::clone(&m), next.clone(), variant.mode());
        let d_next = variant.table_of(&l_next);
        let change = max_change(&d_next, &d);
        let ext_fn = LengthFn::new_unchecked(Arc::clone(&m), ext.clone(), Mode::Nonmonotone);
        let tiha_is_length_table = variant.table_of(&ext_fn) == th;

        trace.descending &= le_all(&next, &ext)
            && le_all(&ext, &d.extract_length())
            && d_next.le(&th)
            && th.le(&d);
        trace.iterations += 1;
        let done = d_next == d || opts.tol.as_ref().is_some_and(|tol| &change < tol);
        if opts.trace_window > 0 {
            if trace.steps.len() == opts.trace_window {
                trace.steps.pop_front();
                trace.dropped += 1;
            }
            trace.steps.push_back(Step {
                d: d.clone(),
                tiha: th,
                length: next,
                d_next: d_next.clone(),
                max_change: change,
                tiha_is_length_table,
            });
        }
        if done {
            trace.converged = true;
            let ratio_min_mean = start_length.as_ref().and_then(|l0| ratios(l0, &l_next));
            return Ok(FixpointResult { length: l_next, table: d_next, trace, ratio_min_mean });
        }
        d = d_next;
    }
    Err(FixpointError::NotConverged(opts.max_iter))
}

fn ratios(l0: &LengthFn, l: &LengthFn) -> Option<(Rational, Rational)> {
    let rs: Vec<Rational> = l0
        .values()
        .iter()
        .zip(l.values())
        .filter(|(a, _)| a.is_positive())
        .map(|(a, b)| b / a)
        .collect();
    let min = rs.iter().min()?.clone();
    let mean = rs.iter().fold(Rational::zero(), |s, r| s + r) / int(rs.len() as i64);
    Some((min, mean))
}

/// The three characterizations of a fixed point, evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointDiagnosis {
    /// `d_ℓ` satisfies Δ and ∇.
    pub satisfies_inequalities: bool,
    /// `d̃̂_ℓ = d_ℓ`.
    pub tiha_unchanged: bool,
    /// The d-variant iteration returns `ℓ` itself.
    pub iteration_unchanged: bool,
}

impl FixedPointDiagnosis {
    pub fn is_fixed(&self) -> bool {
        self.satisfies_inequalities
    }

    pub fn agree(&self) -> bool {
        self.satisfies_inequalities == self.tiha_unchanged && self.tiha_unchanged == self.iteration_unchanged
    }
}

pub fn is_fixed_point(l: &LengthFn) -> FixedPointDiagnosis {
    let d = l.table(DistanceKind::D);
    let flags = check_table(&d);
    let iteration_unchanged = ideal_length(Start::Length(l.clone()), Variant::D, &FixpointOptions::default())
        .map(|r| r.length.values() == l.values())
        .unwrap_or(false);
    FixedPointDiagnosis {
        satisfies_inequalities: flags.delta.holds && flags.nabla.holds,
        tiha_unchanged: tiha(&d) == d,
        iteration_unchanged,
    }
}

/// Where the σ-variant bounds were checked and what was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaBoundReport {
    /// `½σ^{(n+1)} ≤ d̃̂σ^{(n)} ≤ σ^{(n)}` at every retained step.
    pub steps_hold: bool,
    /// First failing `(step, x, y)`.
    pub step_witness: Option<(usize, usize, usize)>,
    /// `½σ^∞ ≤ d̃̂σ^∞ ≤ σ^∞`.
    pub limit_holds: bool,
    pub limit_witness: Option<(usize, usize)>,
    /// Some step had `d̃̂σ^{(n)} < σ^{(n)}` in some entry.
    pub strict_somewhere: bool,
}

fn sandwich(lower: &DistanceTable, mid: &DistanceTable, upper: &DistanceTable) -> Option<(usize, usize)> {
    let n = mid.monoid().len();
    let half = crate::num::ratio(1, 2);
    (0..n * n)
        .find(|&i| {
            let (lo, mi, up) = (&lower.values()[i], &mid.values()[i], &upper.values()[i]);
            &(&half * lo) > mi || mi > up
        })
        .map(|i| (i / n, i % n))
}

pub fn sigma_variant_bounds(result: &FixpointResult) -> SigmaBoundReport {
    let trace = &result.trace;
    let mut step_witness = None;
    let mut strict = false;
    for (k, s) in trace.steps.iter().enumerate() {
        if step_witness.is_none() {
            if let Some((x, y)) = sandwich(&s.d_next, &s.tiha, &s.d) {
                step_witness = Some((trace.dropped + k + 1, x, y));
            }
        }
        strict |= s.tiha.values().iter().zip(s.d.values()).any(|(a, b)| a < b);
    }
    let limit = &result.table;
    let limit_witness = sandwich(limit, &tiha(limit), limit);
    SigmaBoundReport {
        steps_hold: step_witness.is_none(),
        step_witness,
        limit_holds: limit_witness.is_none(),
        limit_witness,
        strict_somewhere: strict,
    }
}
