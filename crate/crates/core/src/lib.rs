//! Ball-polytopes (intersections of congruent balls), random ball-polytope
//! experiments, and numerical checks of the integral-geometric formulas that
//! govern their face numbers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod ballhull;
pub mod body;
pub mod cli;
pub mod config;
pub mod error;
pub mod geom;
pub mod hull;
pub mod montecarlo;
pub mod output;
pub mod quad;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
