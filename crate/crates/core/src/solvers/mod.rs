//! Sample solvers for the hyperbolic test problems.
//!
//! Each solver is a pure function of the problem, the level and the
//! parameter path, so repeated calls are bit-identical.

pub mod advection;
pub mod euler;
pub mod shallow_water;

pub use advection::{advection_exact, solve_advection, AdvectionProblem};
pub use euler::{solve_euler, EulerInitial, EulerProblem};
pub use shallow_water::{solve_shallow_water, ShallowWaterInitial, ShallowWaterProblem};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Scalar initial profiles on a periodic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum InitialProfile {
    /// `(sin(pi x) + 1) / 2`, smooth under period-2 wrapping.
    SinPi,
    /// `(sin x + 1) / 2`, evaluated after wrapping into the domain.
    Sin,
    Constant(f64),
}

impl InitialProfile {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialProfile::SinPi => 0.5 * ((PI * x).sin() + 1.0),
            InitialProfile::Sin => 0.5 * (x.sin() + 1.0),
            InitialProfile::Constant(c) => c,
        }
    }

    /// Evaluates the periodic extension from `[lo, hi)`.
    pub fn eval_periodic(&self, x: f64, lo: f64, hi: f64) -> f64 {
        let len = hi - lo;
        let mut y = lo + (x - lo).rem_euclid(len);
        if y >= hi {
            y -= len;
        }
        self.eval(y)
    }
}

/// Courant check shared by the explicit solvers.
pub(crate) fn check_cfl(speed: f64, courant: f64) -> crate::Result<()> {
    if courant > 1.0 + 1e-12 || !courant.is_finite() {
        return Err(crate::Error::Stability { speed, courant });
    }
    Ok(())
}
