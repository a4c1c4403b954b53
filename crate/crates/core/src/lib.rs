//! Adaptive multilevel and plain Monte Carlo estimators for hyperbolic
//! problems with random parameters and random-choice schemes.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cases;
pub mod drivers;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod jinxin;
pub mod levels;
pub mod random_inputs;
pub mod solvers;

pub use error::{Error, Result};
