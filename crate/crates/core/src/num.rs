//! Exact numbers.
//!
//! Every length and distance value is a [`Rational`]. The hot loops
//! (closures, exhaustive inequality checks, inclusion–exclusion sums) only
//! ever add, subtract and compare, so they run on an [`Scaled`] copy of the
//! data: all values multiplied by the common denominator and stored as
//! `i128`. Results are mapped back exactly.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Scaled values must stay below this so that sums of up to 2^30 of them
/// cannot overflow an `i128`.
const SCALED_LIMIT: u32 = 96;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn min_r<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b < a {
        b
    } else {
        a
    }
}

pub fn max_r<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b > a {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number {0:?}: expected an integer, a fraction p/q or a decimal")]
pub struct ParseRationalError(pub String);

/// Parses `"3"`, `"-7/2"` or `"0.125"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    let err = || ParseRationalError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{whole_digits}{frac}");
        let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|_| err())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    BigInt::from_str(s)
        .map(Rational::from_integer)
        .map_err(|_| err())
}

/// Values the closure and check kernels can run on: exact rationals, scaled
/// integers and (for the irrational `σ_p` tables only) floats.
pub trait Weight: Clone + PartialOrd + fmt::Debug + Zero + Add<Output = Self> + Sub<Output = Self> {
    /// `self ≤ other`; exact except for floats, which allow [`FLOAT_TOL`].
    fn le_tol(&self, other: &Self) -> bool {
        self <= other
    }
}

/// Absolute tolerance for comparisons of float-valued tables.
pub const FLOAT_TOL: f64 = 1e-9;

impl Weight for Rational {}

impl Weight for i128 {}

impl Weight for f64 {
    fn le_tol(&self, other: &Self) -> bool {
        *self <= *other + FLOAT_TOL
    }
}

/// A vector of rationals rewritten over one common denominator.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub values: Vec<i128>,
    pub denom: BigInt,
}

impl Scaled {
    /// `None` when the scaled numerators would not fit comfortably in `i128`.
    pub fn new<'a, I>(values: I) -> Option<Scaled>
    where
        I: IntoIterator<Item = &'a Rational>,
        I::IntoIter: Clone,
    {
        let iter = values.into_iter();
        let mut denom = BigInt::one();
        for v in iter.clone() {
            denom = denom.lcm(v.denom());
        }
        let mut out = Vec::new();
        for v in iter {
            let n = v.numer() * (&denom / v.denom());
            if n.abs().bits() > SCALED_LIMIT as u64 {
                return None;
            }
            out.push(n.to_i128()?);
        }
        Some(Scaled { values: out, denom })
    }

    pub fn unscale(&self, v: i128) -> Rational {
        Rational::new(BigInt::from(v), self.denom.clone())
    }
}

/// Renders a rational either exactly (`"7/2"`) or as a decimal.
pub fn render(r: &Rational, float: bool) -> String {
    if float {
        format!("{}", to_f64(r))
    } else {
        r.to_string()
    }
}
