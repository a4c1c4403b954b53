//! Linear Jin-Xin relaxation system
//!
//! ```text
//! u_t + v_x = 0,   v_t + a u_x = -(v - b u) / eps
//! ```
//!
//! on a periodic node grid, split into upwind convection in the
//! characteristic variables and implicit relaxation. Each half step has a
//! deterministic form and a random-choice form whose seed average equals it.

use crate::error::{Error, Result};
use crate::estimators::FieldStats;
use crate::levels::{FieldSolution, LevelSpec};
use crate::random_inputs::{coarsen_rows, SampleKey, SeedStream, StreamTag};
use crate::solvers::InitialProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JinXinParams {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    /// Reject `a < b^2`. Off only to reproduce configurations that break it.
    #[serde(default = "default_true")]
    pub enforce_subcharacteristic: bool,
}

fn default_true() -> bool {
    true
}

impl JinXinParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "Jin-Xin needs a > 0 and eps > 0, got a={} eps={}",
                self.a, self.epsilon
            )));
        }
        if self.enforce_subcharacteristic && self.a < self.b * self.b {
            return Err(Error::Config(format!(
                "subcharacteristic condition a >= b^2 fails: a={}, b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Relaxation keep-probability `eps / (eps + dt)`.
    pub fn p_relax(&self, dt: f64) -> f64 {
        self.epsilon / (self.epsilon + dt)
    }

    /// Courant number `sqrt(a) dt / dx`.
    pub fn nu(&self, level: &LevelSpec) -> f64 {
        self.a.sqrt() * level.cfl_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JinXinProblem {
    pub params: JinXinParams,
    pub initial_u: InitialProfile,
    pub initial_v: InitialProfile,
    pub domain: (f64, f64),
}

impl JinXinProblem {
    pub fn initial_state(&self, level: &LevelSpec) -> Result<JinXinState> {
        let (lo, hi) = self.domain;
        let u: Vec<f64> = (0..level.n_cells)
            .map(|i| self.initial_u.eval_periodic(level.node(i), lo, hi))
            .collect();
        let v: Vec<f64> = (0..level.n_cells)
            .map(|i| self.initial_v.eval_periodic(level.node(i), lo, hi))
            .collect();
        JinXinState::new(u, v, self.params, self.params.nu(level), level.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApmcMode {
    Deterministic,
    /// Deterministic convection, random relaxation.
    SemiRandom,
    FullyRandom,
}

impl ApmcMode {
    fn random_convection(self) -> bool {
        self == ApmcMode::FullyRandom
    }

    fn random_relaxation(self) -> bool {
        self != ApmcMode::Deterministic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPair {
    pub rho: Vec<f64>,
    pub ell: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JinXinState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub p_relax: f64,
    sqrt_a: f64,
    rho: Vec<f64>,
    ell: Vec<f64>,
}

impl JinXinState {
    pub fn new(u: Vec<f64>, v: Vec<f64>, params: JinXinParams, nu: f64, dt: f64) -> Result<Self> {
        params.validate()?;
        if u.len() != v.len() || u.is_empty() {
            return Err(Error::Argument("u and v must have equal nonzero length".into()));
        }
        if !(nu > 0.0 && nu <= 1.0 + 1e-12) {
            return Err(Error::Stability {
                speed: params.a.sqrt(),
                courant: nu,
            });
        }
        let n = u.len();
        Ok(Self {
            u,
            v,
            a: params.a,
            b: params.b,
            epsilon: params.epsilon,
            nu: nu.min(1.0),
            p_relax: params.p_relax(dt),
            sqrt_a: params.a.sqrt(),
            rho: vec![0.0; n],
            ell: vec![0.0; n],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.u.len()
    }

    pub fn characteristics(&self) -> CharacteristicPair {
        CharacteristicPair {
            rho: self.u.iter().zip(&self.v).map(|(u, v)| self.sqrt_a * u + v).collect(),
            ell: self.u.iter().zip(&self.v).map(|(u, v)| self.sqrt_a * u - v).collect(),
        }
    }

    pub fn set_characteristics(&mut self, pair: &CharacteristicPair) {
        for i in 0..self.n_cells() {
            self.u[i] = (pair.rho[i] + pair.ell[i]) / (2.0 * self.sqrt_a);
            self.v[i] = 0.5 * (pair.rho[i] - pair.ell[i]);
        }
    }

    fn load_characteristics(&mut self) {
        let s = self.sqrt_a;
        for i in 0..self.u.len() {
            self.rho[i] = s * self.u[i] + self.v[i];
            self.ell[i] = s * self.u[i] - self.v[i];
        }
    }

    #[inline]
    fn store(&mut self, i: usize, rho: f64, ell: f64) {
        self.u[i] = (rho + ell) / (2.0 * self.sqrt_a);
        self.v[i] = 0.5 * (rho - ell);
    }

    /// Upwind convection: `rho` moves right, `ell` moves left.
    pub fn convect(&mut self) {
        self.load_characteristics();
        let n = self.n_cells();
        let (keep, nu) = (1.0 - self.nu, self.nu);
        for i in 0..n {
            let left = if i == 0 { n - 1 } else { i - 1 };
            let right = if i + 1 == n { 0 } else { i + 1 };
            let r = keep * self.rho[i] + nu * self.rho[left];
            let l = keep * self.ell[i] + nu * self.ell[right];
            self.store(i, r, l);
        }
    }

    /// Random-choice convection: cell `i` takes its upwind neighbour when
    /// its seed is below `nu`.
    pub fn convect_random(&mut self, xi: &[f64], eta: &[f64]) -> Result<()> {
        let n = self.n_cells();
        if xi.len() != n || eta.len() != n {
            return Err(Error::Argument(format!(
                "convection needs {n} seeds per stream, got {} and {}",
                xi.len(),
                eta.len()
            )));
        }
        self.load_characteristics();
        for i in 0..n {
            let left = if i == 0 { n - 1 } else { i - 1 };
            let right = if i + 1 == n { 0 } else { i + 1 };
            let r = if xi[i] < self.nu { self.rho[left] } else { self.rho[i] };
            let l = if eta[i] < self.nu { self.ell[right] } else { self.ell[i] };
            self.store(i, r, l);
        }
        Ok(())
    }

    /// Implicit relaxation `v <- p v + (1 - p) b u`.
    pub fn relax(&mut self) {
        let (p, b) = (self.p_relax, self.b);
        for (v, u) in self.v.iter_mut().zip(&self.u) {
            *v = p * *v + (1.0 - p) * b * u;
        }
    }

    /// Random-choice relaxation: keep `v` when the seed is below `p`,
    /// otherwise project onto `b u`.
    pub fn relax_random(&mut self, zeta: &[f64]) -> Result<()> {
        if zeta.len() != self.n_cells() {
            return Err(Error::Argument(format!(
                "relaxation needs {} seeds, got {}",
                self.n_cells(),
                zeta.len()
            )));
        }
        for i in 0..self.n_cells() {
            if zeta[i] >= self.p_relax {
                self.v[i] = self.b * self.u[i];
            }
        }
        Ok(())
    }

    pub fn deterministic_step(&mut self) {
        self.convect();
        self.relax();
    }
}

pub fn jinxin_deterministic_step(state: &mut JinXinState) {
    state.deterministic_step();
}

pub fn apmc_convection_sample(state: &mut JinXinState, xi: &[f64], eta: &[f64]) -> Result<()> {
    state.convect_random(xi, eta)
}

pub fn apmc_relaxation_sample(state: &mut JinXinState, zeta: &[f64]) -> Result<()> {
    state.relax_random(zeta)
}

/// Per-step seed rows for one sample, one stream per random sub-step.
struct StepSeeds {
    xi: SeedStream,
    eta: SeedStream,
    zeta: SeedStream,
}

impl StepSeeds {
    fn new(key: SampleKey) -> Self {
        Self {
            xi: key.with_tag(StreamTag::ConvectionRho).stream(),
            eta: key.with_tag(StreamTag::ConvectionL).stream(),
            zeta: key.with_tag(StreamTag::Relaxation).stream(),
        }
    }
}

/// Applies one step; `xi`, `eta`, `zeta` are only read where the mode is random.
fn advance(state: &mut JinXinState, mode: ApmcMode, xi: &[f64], eta: &[f64], zeta: &[f64]) -> Result<()> {
    if mode.random_convection() {
        state.convect_random(xi, eta)?;
    } else {
        state.convect();
    }
    if mode.random_relaxation() {
        state.relax_random(zeta)?;
    } else {
        state.relax();
    }
    Ok(())
}

fn draw_row(stream: &mut SeedStream, buf: &mut [f64], needed: bool) {
    if needed {
        stream.fill(buf);
    }
}

/// Runs one APMC sample and reports the state after every step
/// (`observe(0, ..)` sees the initial data).
pub fn apmc_trajectory<F>(
    problem: &JinXinProblem,
    level: &LevelSpec,
    mode: ApmcMode,
    key: SampleKey,
    mut observe: F,
) -> Result<JinXinState>
where
    F: FnMut(usize, &JinXinState),
{
    let mut state = problem.initial_state(level)?;
    let n = level.n_cells;
    let mut seeds = StepSeeds::new(key);
    let (mut xi, mut eta, mut zeta) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    observe(0, &state);
    for step in 0..level.n_steps {
        draw_row(&mut seeds.xi, &mut xi, mode.random_convection());
        draw_row(&mut seeds.eta, &mut eta, mode.random_convection());
        draw_row(&mut seeds.zeta, &mut zeta, mode.random_relaxation());
        advance(&mut state, mode, &xi, &eta, &zeta)?;
        observe(step + 1, &state);
    }
    Ok(state)
}

fn to_field(level_index: usize, state: JinXinState) -> FieldSolution {
    FieldSolution::new(level_index, vec!["u", "v"], vec![state.u, state.v])
}

/// One APMC sample at the final time, fields `(u, v)`.
pub fn apmc_solve(
    problem: &JinXinProblem,
    level: &LevelSpec,
    mode: ApmcMode,
    key: SampleKey,
) -> Result<FieldSolution> {
    apmc_trajectory(problem, level, mode, key, |_, _| {}).map(|s| to_field(level.level_index, s))
}

/// Coupled fine/coarse pair: the fine run uses its own seeds, and each
/// coarse step uses `(block max)^{gamma^2}` over the Γ×Γ block of fine
/// seeds it covers.
pub fn mlapmc_coupled_pair(
    problem: &JinXinProblem,
    fine_level: &LevelSpec,
    coarse_level: &LevelSpec,
    gamma: usize,
    mode: ApmcMode,
    key: SampleKey,
) -> Result<(FieldSolution, FieldSolution)> {
    if fine_level.level_index == 0 {
        return Err(Error::Argument("a coupled pair needs a fine level >= 1".into()));
    }
    let (nf, nc) = (fine_level.n_cells, coarse_level.n_cells);
    if nf != nc * gamma || fine_level.n_steps != coarse_level.n_steps * gamma {
        return Err(Error::Argument(format!(
            "levels {} and {} are not nested by {gamma}",
            fine_level.level_index, coarse_level.level_index
        )));
    }
    let mut fine = problem.initial_state(fine_level)?;
    let mut coarse = problem.initial_state(coarse_level)?;
    let mut seeds = StepSeeds::new(key);
    let conv = mode.random_convection();
    let relax = mode.random_relaxation();
    let mut xi = vec![0.0; nf * gamma];
    let mut eta = vec![0.0; nf * gamma];
    let mut zeta = vec![0.0; nf * gamma];
    let (mut cxi, mut ceta, mut czeta) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);

    for _ in 0..coarse_level.n_steps {
        for k in 0..gamma {
            let rows = k * nf..(k + 1) * nf;
            draw_row(&mut seeds.xi, &mut xi[rows.clone()], conv);
            draw_row(&mut seeds.eta, &mut eta[rows.clone()], conv);
            draw_row(&mut seeds.zeta, &mut zeta[rows.clone()], relax);
            advance(&mut fine, mode, &xi[rows.clone()], &eta[rows.clone()], &zeta[rows])?;
        }
        if conv {
            coarsen_rows(&xi, nf, gamma, &mut cxi);
            coarsen_rows(&eta, nf, gamma, &mut ceta);
        }
        if relax {
            coarsen_rows(&zeta, nf, gamma, &mut czeta);
        }
        advance(&mut coarse, mode, &cxi, &ceta, &czeta)?;
    }
    Ok((
        to_field(fine_level.level_index, fine),
        to_field(coarse_level.level_index, coarse),
    ))
}

/// Limit scheme for `eps -> 0`: after the first convection from the given
/// data, `v = b u` and `u` follows a centred advection step with numerical
/// diffusion.
pub fn ap_limit_scheme(problem: &JinXinProblem, level: &LevelSpec) -> Result<FieldSolution> {
    let mut state = problem.initial_state(level)?;
    let n = level.n_cells;
    let (b, sa, nu) = (state.b, state.sqrt_a, state.nu);
    let wl = nu * (sa + b) / (2.0 * sa);
    let wr = nu * (sa - b) / (2.0 * sa);
    let mut u = state.u.clone();
    let mut next = vec![0.0; n];
    for step in 0..level.n_steps {
        if step == 0 {
            state.convect();
            u.copy_from_slice(&state.u);
        } else {
            for i in 0..n {
                let left = u[(i + n - 1) % n];
                let right = u[(i + 1) % n];
                next[i] = (1.0 - nu) * u[i] + wl * left + wr * right;
            }
            std::mem::swap(&mut u, &mut next);
        }
    }
    let v = u.iter().map(|x| b * x).collect();
    Ok(FieldSolution::new(level.level_index, vec!["u", "v"], vec![u, v]))
}

/// Energy and variance diagnostics per time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JinXinDiagnostics {
    /// Energy of the mean fields.
    pub energy: Vec<f64>,
    /// Difference-quotient energy of the initial data.
    pub grad_energy: f64,
    /// Integrated variance energy.
    pub variance_energy: Vec<f64>,
    /// Squared variation of the mean fields (differences, not quotients).
    pub v_n: Vec<f64>,
    /// Running sum over steps `j >= 1` of `sum_i (E[b u - v])^2 dx`.
    pub cumulative_equilibrium: Vec<f64>,
    pub n_samples: u64,
}

/// `sum_i [(a-b^2) u_i^2 + (b u_i - v_i)^2] dx`.
pub fn energy(u: &[f64], v: &[f64], a: f64, b: f64, dx: f64) -> f64 {
    u.iter()
        .zip(v)
        .map(|(u, v)| (a - b * b) * u * u + (b * u - v).powi(2))
        .sum::<f64>()
        * dx
}

/// Same energy on forward differences divided by `dx`.
pub fn gradient_energy(u: &[f64], v: &[f64], a: f64, b: f64, dx: f64) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| {
            let du = (u[(i + 1) % n] - u[i]) / dx;
            let dv = (v[(i + 1) % n] - v[i]) / dx;
            (a - b * b) * du * du + (b * du - dv).powi(2)
        })
        .sum::<f64>()
        * dx
}

fn variation(u: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| {
            let du = u[(i + 1) % n] - u[i];
            let dv = v[(i + 1) % n] - v[i];
            (a - b * b) * du * du + (b * du - dv).powi(2)
        })
        .sum()
}

/// Streaming per-step statistics of `u` and `b u - v` over samples.
#[derive(Debug, Clone)]
pub struct DiagnosticsAccumulator {
    a: f64,
    b: f64,
    dx: f64,
    u: Vec<FieldStats>,
    w: Vec<FieldStats>,
    v: Vec<FieldStats>,
    scratch: Vec<f64>,
}

impl DiagnosticsAccumulator {
    pub fn new(params: &JinXinParams, level: &LevelSpec) -> Self {
        let steps = level.n_steps + 1;
        let cells = level.n_cells;
        Self {
            a: params.a,
            b: params.b,
            dx: level.dx,
            u: vec![FieldStats::new(cells); steps],
            w: vec![FieldStats::new(cells); steps],
            v: vec![FieldStats::new(cells); steps],
            scratch: vec![0.0; cells],
        }
    }

    pub fn observe(&mut self, step: usize, state: &JinXinState) -> Result<()> {
        for (s, (u, v)) in self.scratch.iter_mut().zip(state.u.iter().zip(&state.v)) {
            *s = self.b * u - v;
        }
        self.u[step].accumulate(&state.u, 0.0)?;
        self.v[step].accumulate(&state.v, 0.0)?;
        self.w[step].accumulate(&self.scratch, 0.0)
    }

    pub fn merge(&mut self, other: &DiagnosticsAccumulator) {
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            a.merge(b);
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            a.merge(b);
        }
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            a.merge(b);
        }
    }

    pub fn finish(&self) -> Result<JinXinDiagnostics> {
        let n = self.u[0].n;
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "variance diagnostics need at least 2 samples, have {n}"
            )));
        }
        let (a, b, dx) = (self.a, self.b, self.dx);
        let mut energy_n = Vec::with_capacity(self.u.len());
        let mut variance_energy = Vec::with_capacity(self.u.len());
        let mut v_n = Vec::with_capacity(self.u.len());
        let mut cumulative = Vec::with_capacity(self.u.len());
        let mut running = 0.0;
        for (step, ((su, sw), sv)) in self.u.iter().zip(&self.w).zip(&self.v).enumerate() {
            let e: f64 = su
                .mean
                .iter()
                .zip(&sw.mean)
                .map(|(mu, mw)| (a - b * b) * mu * mu + mw * mw)
                .sum::<f64>()
                * dx;
            energy_n.push(e);
            let var_u = su.variance()?;
            let var_w = sw.variance()?;
            variance_energy.push(
                var_u
                    .iter()
                    .zip(&var_w)
                    .map(|(vu, vw)| (a - b * b) * vu + vw)
                    .sum::<f64>()
                    * dx,
            );
            v_n.push(variation(&su.mean, &sv.mean, a, b));
            if step > 0 {
                running += sw.mean.iter().map(|m| m * m).sum::<f64>() * dx;
            }
            cumulative.push(running);
        }
        let u0 = &self.u[0].mean;
        let v0 = &self.v[0].mean;
        Ok(JinXinDiagnostics {
            energy: energy_n,
            grad_energy: gradient_energy(u0, v0, a, b, dx),
            variance_energy,
            v_n,
            cumulative_equilibrium: cumulative,
            n_samples: n,
        })
    }
}

/// Runs `n_samples` APMC trajectories and returns their diagnostics.
pub fn compute_diagnostics(
    problem: &JinXinProblem,
    level: &LevelSpec,
    mode: ApmcMode,
    master_seed: u64,
    n_samples: u64,
) -> Result<JinXinDiagnostics> {
    let mut acc = DiagnosticsAccumulator::new(&problem.params, level);
    for id in 0..n_samples {
        let key = SampleKey::new(master_seed, id, level.level_index);
        let mut failure = None;
        apmc_trajectory(problem, level, mode, key, |step, s| {
            if let Err(e) = acc.observe(step, s) {
                failure.get_or_insert(e);
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    acc.finish()
}
