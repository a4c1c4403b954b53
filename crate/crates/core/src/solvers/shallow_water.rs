//! Periodic shallow water over a random bottom `B(x) = 1 + w(x) sin(pi x)`.
//!
//! First-order central-upwind fluxes on hydrostatically reconstructed
//! interface depths; the topography source is the matching pressure
//! correction, which keeps lake-at-rest states exact.

use super::check_cfl;
use crate::error::{Error, Result};
use crate::levels::{FieldSolution, LevelSpec};
use crate::random_inputs::ParameterPath;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShallowWaterInitial {
    /// `h = 5 + exp(cos 2 pi x)`, `u = sin(cos 2 pi x)`.
    Periodic,
    /// Lake at rest, `h + B = surface`, `u = 0`.
    LakeAtRest { surface: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShallowWaterProblem {
    pub initial: ShallowWaterInitial,
    pub gravity: f64,
    pub domain: (f64, f64),
}

impl Default for ShallowWaterProblem {
    fn default() -> Self {
        Self {
            initial: ShallowWaterInitial::Periodic,
            gravity: 1.0,
            domain: (0.0, 1.0),
        }
    }
}

/// Cell-wise bottom `1 + w_k sin(pi x_i)` with `w_k` from the path
/// interval containing node `x_i`.
pub fn topography(level: &LevelSpec, weights: &ParameterPath) -> Vec<f64> {
    (0..level.n_cells)
        .map(|i| 1.0 + weights.value_at_index(i, level.n_cells) * (PI * level.node(i)).sin())
        .collect()
}

impl ShallowWaterProblem {
    pub fn initial_state(&self, level: &LevelSpec, bottom: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (0..level.n_cells)
            .map(|i| match self.initial {
                ShallowWaterInitial::Periodic => {
                    let c = (2.0 * PI * level.node(i)).cos();
                    let h = 5.0 + c.exp();
                    (h, h * c.sin())
                }
                ShallowWaterInitial::LakeAtRest { surface } => (surface - bottom[i], 0.0),
            })
            .unzip()
    }
}

#[inline]
fn central_upwind(hl: f64, ql: f64, hr: f64, qr: f64, g: f64) -> (f64, f64, f64) {
    let (ul, ur) = (ql / hl, qr / hr);
    let (cl, cr) = ((g * hl).sqrt(), (g * hr).sqrt());
    let ap = (ul + cl).max(ur + cr).max(0.0);
    let am = (ul - cl).min(ur - cr).min(0.0);
    let fl = (ql, ql * ul + 0.5 * g * hl * hl);
    let fr = (qr, qr * ur + 0.5 * g * hr * hr);
    let span = ap - am;
    let speed = ap.max(-am);
    if span <= f64::EPSILON {
        return (0.5 * (fl.0 + fr.0), 0.5 * (fl.1 + fr.1), speed);
    }
    let w = ap * am / span;
    (
        (ap * fl.0 - am * fr.0) / span + w * (hr - hl),
        (ap * fl.1 - am * fr.1) / span + w * (qr - ql),
        speed,
    )
}

/// Advances `(h, hu)` to the final time over the sampled bottom.
pub fn solve_shallow_water(
    problem: &ShallowWaterProblem,
    level: &LevelSpec,
    topography_path: &ParameterPath,
) -> Result<FieldSolution> {
    let n = level.n_cells;
    let g = problem.gravity;
    let lam = level.cfl_ratio;
    let bottom = topography(level, topography_path);
    let (mut h, mut q) = problem.initial_state(level, &bottom);
    if h.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Config("initial depth must be positive".into()));
    }
    // Interface f sits between cell f-1 and cell f (periodic).
    let b_star: Vec<f64> = (0..n).map(|f| bottom[(f + n - 1) % n].max(bottom[f])).collect();
    let mut mass = vec![0.0; n];
    let mut mom = vec![0.0; n];
    // Reconstructed depths on the left and right of each interface.
    let mut h_left = vec![0.0; n];
    let mut h_right = vec![0.0; n];

    for step in 0..level.n_steps {
        let mut smax = 0.0f64;
        for f in 0..n {
            let il = (f + n - 1) % n;
            let ir = f;
            let hl = (h[il] + bottom[il] - b_star[f]).max(0.0);
            let hr = (h[ir] + bottom[ir] - b_star[f]).max(0.0);
            let ql = hl * q[il] / h[il];
            let qr = hr * q[ir] / h[ir];
            let (fm, fq, s) = if hl > 0.0 && hr > 0.0 {
                central_upwind(hl, ql, hr, qr, g)
            } else {
                return Err(Error::SolverFailure {
                    step,
                    reason: format!("dry interface {f}"),
                });
            };
            smax = smax.max(s);
            mass[f] = fm;
            mom[f] = fq;
            h_left[f] = hl;
            h_right[f] = hr;
        }
        check_cfl(smax, lam * smax)?;
        for i in 0..n {
            let fr = (i + 1) % n;
            // Right face of cell i uses its own reconstruction h_left[fr];
            // left face uses h_right[i].
            let src = 0.5 * g * (h_left[fr] * h_left[fr] - h_right[i] * h_right[i]);
            h[i] -= lam * (mass[fr] - mass[i]);
            q[i] -= lam * ((mom[fr] - mom[i]) - src);
            if !(h[i] > 0.0) {
                return Err(Error::SolverFailure {
                    step,
                    reason: format!("non-positive depth {} in cell {i}", h[i]),
                });
            }
        }
    }
    Ok(FieldSolution::new(level.level_index, vec!["h", "hu"], vec![h, q]))
}
