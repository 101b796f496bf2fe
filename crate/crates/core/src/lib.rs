//! Numerical toolkit for Orlicz bump conditions, sparse commutator operators and
//! iterated Hilbert-transform commutators on one-dimensional dyadic grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bumps;
pub mod error;
pub mod grid;
pub mod harness;
pub mod numeric;
pub mod orlicz;
pub mod operators;
pub mod oscillation;
pub mod sparse;
pub mod young;

pub use error::{Error, Result};
