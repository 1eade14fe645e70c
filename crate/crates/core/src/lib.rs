//! Cyclic pure-state quantum evolutions, their Aharonov-Anandan geometric
//! phases and Fubini-Study lengths, and lower bounds on the evolution time
//! needed to generate a given geometric phase.
//!
//! Units are such that hbar = 1; angles are in radians.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod quantum;
pub mod scenarios;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
