//! One-dimensional Euler equations with gravity `phi = g x` and a random,
//! time-dependent adiabatic exponent. The pressure is continuous in time when
//! the exponent changes; the internal energy absorbs the jump.
//!
//! First-order well-balanced finite volumes: each cell reconstructs an
//! isentropic hydrostatic profile through its own state, fluxes are Rusanov,
//! and the momentum source is the pressure jump of that local profile, so
//! discrete hydrostatic states are preserved to round-off.

use super::check_cfl;
use crate::error::{Error, Result};
use crate::levels::{FieldSolution, LevelSpec};
use crate::random_inputs::ParameterPath;
use serde::{Deserialize, Serialize};

/// Smallest exponent accepted; the equation of state degenerates at 1.
const LAMBDA_FLOOR: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EulerInitial {
    /// `rho = 2 - g x`, `v = 0`, `p = A0 rho^lambda0`.
    Stratified,
    /// Discrete polytropic equilibrium `h_i + phi_i = level`, `v = 0`, `p = A0 rho^lambda0`.
    Hydrostatic { level: f64 },
    /// Spatially uniform state.
    Uniform { rho: f64, v: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerProblem {
    pub initial: EulerInitial,
    pub gravity: f64,
    pub eos_constant: f64,
    pub lambda0: f64,
    pub domain: (f64, f64),
}

impl Default for EulerProblem {
    fn default() -> Self {
        Self {
            initial: EulerInitial::Stratified,
            gravity: 0.5,
            eos_constant: 1.0,
            lambda0: 4.0 / 3.0,
            domain: (0.0, 2.0),
        }
    }
}

/// Conserved state `(rho, rho v, E)` of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cons {
    rho: f64,
    mom: f64,
    energy: f64,
}

#[derive(Debug, Clone, Copy)]
struct Prim {
    rho: f64,
    v: f64,
    p: f64,
}

impl Prim {
    #[inline]
    fn cons(self, lambda: f64) -> Cons {
        Cons {
            rho: self.rho,
            mom: self.rho * self.v,
            energy: self.p / (lambda - 1.0) + 0.5 * self.rho * self.v * self.v,
        }
    }

    #[inline]
    fn flux(self, lambda: f64) -> Cons {
        let e = self.p / (lambda - 1.0) + 0.5 * self.rho * self.v * self.v;
        Cons {
            rho: self.rho * self.v,
            mom: self.rho * self.v * self.v + self.p,
            energy: (e + self.p) * self.v,
        }
    }

    #[inline]
    fn speed(self, lambda: f64) -> f64 {
        self.v.abs() + (lambda * self.p / self.rho).sqrt()
    }
}

impl EulerProblem {
    fn phi(&self, x: f64) -> f64 {
        self.gravity * x
    }

    pub fn initial_primitive(&self, level: &LevelSpec) -> Result<Vec<(f64, f64, f64)>> {
        let lam = self.lambda0;
        let a0 = self.eos_constant;
        let cells = (0..level.n_cells).map(|i| {
            let x = level.center(i);
            match self.initial {
                EulerInitial::Stratified => {
                    let rho = 2.0 - self.phi(x);
                    (rho, 0.0, a0 * rho.powf(lam))
                }
                EulerInitial::Hydrostatic { level: c } => {
                    // h = lam/(lam-1) A rho^(lam-1) = c - phi
                    let h = c - self.phi(x);
                    let rho = (h * (lam - 1.0) / (lam * a0)).powf(1.0 / (lam - 1.0));
                    (rho, 0.0, a0 * rho.powf(lam))
                }
                EulerInitial::Uniform { rho, v, p } => (rho, v, p),
            }
        });
        let out: Vec<_> = cells.collect();
        if out.iter().any(|&(r, _, p)| !(r > 0.0 && p > 0.0)) {
            return Err(Error::Config(
                "Euler initial data must have positive density and pressure".into(),
            ));
        }
        Ok(out)
    }
}

#[inline]
fn primitive(u: Cons, lambda: f64) -> Prim {
    let v = u.mom / u.rho;
    Prim {
        rho: u.rho,
        v,
        p: (lambda - 1.0) * (u.energy - 0.5 * u.mom * v),
    }
}

/// Hydrostatic isentropic profile through `cell` evaluated where the
/// potential has changed by `dphi`.
#[inline]
fn equilibrium_at(cell: Prim, lambda: f64, dphi: f64) -> Option<Prim> {
    let h = lambda / (lambda - 1.0) * cell.p / cell.rho;
    let ratio = (h - dphi) / h;
    if !(ratio > 0.0) {
        return None;
    }
    let r = ratio.powf(1.0 / (lambda - 1.0));
    Some(Prim {
        rho: cell.rho * r,
        v: cell.v,
        p: cell.p * r * ratio,
    })
}

#[inline]
fn rusanov(left: Prim, right: Prim, lambda: f64) -> Cons {
    let fl = left.flux(lambda);
    let fr = right.flux(lambda);
    let ul = left.cons(lambda);
    let ur = right.cons(lambda);
    let s = left.speed(lambda).max(right.speed(lambda));
    Cons {
        rho: 0.5 * (fl.rho + fr.rho) - 0.5 * s * (ur.rho - ul.rho),
        mom: 0.5 * (fl.mom + fr.mom) - 0.5 * s * (ur.mom - ul.mom),
        energy: 0.5 * (fl.energy + fr.energy) - 0.5 * s * (ur.energy - ul.energy),
    }
}

/// Runs the well-balanced scheme to the final time with `lambda` taken
/// from the path on each step.
pub fn solve_euler(
    problem: &EulerProblem,
    level: &LevelSpec,
    path: &ParameterPath,
) -> Result<FieldSolution> {
    let n = level.n_cells;
    let m = level.n_steps;
    let dx = level.dx;
    let kappa = level.cfl_ratio;
    let dphi_half = problem.gravity * 0.5 * dx;
    let g = problem.gravity;

    let lam0 = problem.lambda0.max(LAMBDA_FLOOR);
    let mut u: Vec<Cons> = problem
        .initial_primitive(level)?
        .into_iter()
        .map(|(rho, v, p)| Prim { rho, v, p }.cons(lam0))
        .collect();
    let mut prim = vec![Prim { rho: 0.0, v: 0.0, p: 0.0 }; n];
    // Reconstructed states at each cell's left and right face.
    let mut face_l = prim.clone();
    let mut face_r = prim.clone();
    let mut flux = vec![Cons { rho: 0.0, mom: 0.0, energy: 0.0 }; n + 1];

    let mut lambda_prev = lam0;
    for step in 0..m {
        let lambda = path.value_at_index(step, m).max(LAMBDA_FLOOR);
        if lambda != lambda_prev {
            // Pressure is continuous across a change of exponent.
            for c in u.iter_mut() {
                let kinetic = 0.5 * c.mom * c.mom / c.rho;
                c.energy = (c.energy - kinetic) * (lambda_prev - 1.0) / (lambda - 1.0) + kinetic;
            }
            lambda_prev = lambda;
        }
        let fail = |reason: String| Error::SolverFailure { step, reason };
        let mut smax = 0.0f64;
        for i in 0..n {
            let q = primitive(u[i], lambda);
            if !(q.rho > 0.0 && q.p > 0.0) {
                return Err(fail(format!(
                    "non-positive state rho={} p={} in cell {i}",
                    q.rho, q.p
                )));
            }
            prim[i] = q;
            face_l[i] = equilibrium_at(q, lambda, -dphi_half)
                .ok_or_else(|| fail(format!("reconstruction failed in cell {i}")))?;
            face_r[i] = equilibrium_at(q, lambda, dphi_half)
                .ok_or_else(|| fail(format!("reconstruction failed in cell {i}")))?;
            smax = smax.max(face_l[i].speed(lambda)).max(face_r[i].speed(lambda));
        }
        check_cfl(smax, kappa * smax)?;

        // Zero-gradient boundaries: the outer face state mirrors the inner one.
        flux[0] = face_l[0].flux(lambda);
        for f in 1..n {
            flux[f] = rusanov(face_r[f - 1], face_l[f], lambda);
        }
        flux[n] = face_r[n - 1].flux(lambda);

        for i in 0..n {
            let (fl, fr) = (flux[i], flux[i + 1]);
            let src_mom = (face_r[i].p - face_l[i].p) / dx;
            let src_energy = -0.5 * (fl.rho + fr.rho) * g;
            u[i].rho -= kappa * (fr.rho - fl.rho);
            u[i].mom += -kappa * (fr.mom - fl.mom) + level.dt * src_mom;
            u[i].energy += -kappa * (fr.energy - fl.energy) + level.dt * src_energy;
        }
    }

    let lam_end = path.value_at_index(m - 1, m).max(LAMBDA_FLOOR);
    let mut rho = Vec::with_capacity(n);
    let mut mom = Vec::with_capacity(n);
    let mut energy = Vec::with_capacity(n);
    for (i, c) in u.iter().enumerate() {
        let q = primitive(*c, lam_end);
        if !(q.rho > 0.0 && q.p > 0.0) || !c.energy.is_finite() {
            return Err(Error::SolverFailure {
                step: m,
                reason: format!("non-positive final state in cell {i}"),
            });
        }
        rho.push(c.rho);
        mom.push(c.mom);
        energy.push(c.energy);
    }
    Ok(FieldSolution::new(
        level.level_index,
        vec!["rho", "rho_v", "E"],
        vec![rho, mom, energy],
    ))
}
