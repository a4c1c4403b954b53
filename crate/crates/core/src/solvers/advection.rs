//! Periodic scalar advection `u_t + a(t) u_x = 0` with a time-dependent
//! random velocity, solved by first-order upwind on grid nodes.

use super::{check_cfl, InitialProfile};
use crate::error::{Error, Result};
use crate::levels::{FieldSolution, LevelSpec};
use crate::random_inputs::ParameterPath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvectionProblem {
    pub initial: InitialProfile,
    /// Periodic domain.
    pub domain: (f64, f64),
}

impl AdvectionProblem {
    pub fn initial_field(&self, level: &LevelSpec) -> Vec<f64> {
        (0..level.n_cells)
            .map(|i| self.initial.eval_periodic(level.node(i), self.domain.0, self.domain.1))
            .collect()
    }
}

/// Upwind transport over `level.n_steps` steps; the velocity on step `n`
/// is the path value on the interval containing `t_n`.
pub fn solve_advection(
    problem: &AdvectionProblem,
    level: &LevelSpec,
    path: &ParameterPath,
) -> Result<FieldSolution> {
    let kappa = level.cfl_ratio;
    let a_min = path.min_value();
    if !(a_min > 0.0) {
        return Err(Error::Unsupported(format!(
            "upwind stencil needs a > 0, path reaches {a_min}"
        )));
    }
    let a_max = path.max_value();
    check_cfl(a_max, kappa * a_max)?;

    let x = level.n_cells;
    let m = level.n_steps;
    let mut v = problem.initial_field(level);
    let mut w = vec![0.0; x];
    for n in 0..m {
        let nu = kappa * path.value_at_index(n, m);
        let keep = 1.0 - nu;
        w[0] = keep * v[0] + nu * v[x - 1];
        for (wi, pair) in w[1..].iter_mut().zip(v.windows(2)) {
            *wi = keep * pair[1] + nu * pair[0];
        }
        std::mem::swap(&mut v, &mut w);
    }
    Ok(FieldSolution::scalar(level.level_index, "u", v))
}

/// Characteristics solution `u0(x - ∫ a dt)` at the grid nodes.
pub fn advection_exact(
    problem: &AdvectionProblem,
    path: &ParameterPath,
    level: &LevelSpec,
) -> FieldSolution {
    let shift = level.horizon() * path.mean();
    let (lo, hi) = problem.domain;
    let u = (0..level.n_cells)
        .map(|i| problem.initial.eval_periodic(level.node(i) - shift, lo, hi))
        .collect();
    FieldSolution::scalar(level.level_index, "u", u)
}
