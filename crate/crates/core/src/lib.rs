//! Distances, closures and ideal length functions on finite abelian
//! idempotent monoids.

pub mod boolean;
pub mod closure;
pub mod fixpoint;
pub mod fixtures;
pub mod hom;
pub mod inequality;
pub mod length;
pub mod monoid;
pub mod num;
pub mod quotient;
pub mod set_model;

pub use length::{DistanceKind, DistanceTable, LengthFn, Mode, TableKind};
pub use monoid::{Elem, Monoid};
pub use num::Rational;
