//! Named instances used throughout the tests and by the CLI.

use std::sync::Arc;

use crate::length::{validate_length, LengthFn, Mode};
use crate::monoid::powerset;
use crate::num::int;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 2] = ["fix_p2", "fix_bad"];

/// Powerset of `{1,2}` with the counting measure.
pub fn fix_p2() -> LengthFn {
    let m = Arc::new(powerset(&["1", "2"]).expect("powerset"));
    validate_length(&m, [0, 1, 1, 2].map(int).to_vec(), Mode::Monotone).expect("counting measure")
}

/// Powerset of `{x,y,z}` with a monotone length whose `d` breaks the
/// triangle inequality: `d({x},{y}) = d({y},{z}) = 0` but `d({x},{z}) = 2`.
pub fn fix_bad() -> LengthFn {
    let m = Arc::new(powerset(&["x", "y", "z"]).expect("powerset"));
    // masks: x=1, y=2, z=4
    let values = [0, 2, 2, 2, 2, 4, 2, 4].map(int).to_vec();
    validate_length(&m, values, Mode::Monotone).expect("fix_bad is a monotone length")
}

pub fn builtin(name: &str) -> Option<LengthFn> {
    match name {
        "fix_p2" => Some(fix_p2()),
        "fix_bad" => Some(fix_bad()),
        _ => None,
    }
}
