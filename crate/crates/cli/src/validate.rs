//! `validate`: reduced-scale invariant checks with measured values and bounds.

use crate::config::ExperimentConfig;
use crate::run::executor;
use anyhow::Result;
use mlmc_hyperbolic::analysis::ks_uniform;
use mlmc_hyperbolic::cases::{sample_pair, sample_solution};
use mlmc_hyperbolic::estimators::{l2_norm, FieldStats};
use mlmc_hyperbolic::jinxin::{
    ap_limit_scheme, apmc_solve, energy, ApmcMode, JinXinParams, JinXinProblem,
};
use mlmc_hyperbolic::levels::{build_hierarchy, LevelSpec};
use mlmc_hyperbolic::random_inputs::{
    coarsen_seeds_spacetime, coarsen_seeds_time, draw_seeds, ParameterLaw, ParameterPath,
    PathKind, SampleKey, SeedLayout,
};
use mlmc_hyperbolic::solvers::{
    shallow_water::topography, solve_euler, solve_shallow_water, EulerInitial, EulerProblem,
    InitialProfile, ShallowWaterInitial, ShallowWaterProblem,
};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    /// `"le"` when `measured <= bound` passes, `"ge"` when `measured >= bound` does.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, bound: f64) -> Self {
        Self { name, measured, bound, relation: "le", passed: measured <= bound }
    }

    fn at_least(name: &'static str, measured: f64, bound: f64) -> Self {
        Self { name, measured, bound, relation: "ge", passed: measured >= bound }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub case_id: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

const ADMISSIBLE: JinXinParams = JinXinParams {
    a: 4.0,
    b: 1.0,
    epsilon: 1.0,
    enforce_subcharacteristic: true,
};

fn jinxin_problem(params: JinXinParams) -> JinXinProblem {
    JinXinProblem {
        params,
        initial_u: InitialProfile::SinPi,
        initial_v: InitialProfile::Constant(0.0),
        domain: (-1.0, 1.0),
    }
}

/// 64 cells on `[-1, 1]` at Courant number 1/2 for `a = 4`.
fn jinxin_level(horizon: f64) -> Result<LevelSpec> {
    Ok(build_hierarchy((-1.0, 1.0), horizon, 2, 1.0 / 32.0, 0.25, 0)?.level(0))
}

fn energy_check() -> Result<Check> {
    let lv = jinxin_level(200.0 * 0.25 / 32.0)?;
    let mut s = jinxin_problem(ADMISSIBLE).initial_state(&lv)?;
    let (a, b) = (ADMISSIBLE.a, ADMISSIBLE.b);
    let mut e = energy(&s.u, &s.v, a, b, lv.dx);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..lv.n_steps {
        s.deterministic_step();
        let next = energy(&s.u, &s.v, a, b, lv.dx);
        worst = worst.max(next - e);
        e = next;
    }
    Ok(Check::at_most("jinxin_energy_increase", worst, 1e-12))
}

fn ap_limit_check() -> Result<Check> {
    let lv = jinxin_level(1.0)?;
    let problem = jinxin_problem(JinXinParams { epsilon: 1e-8, ..ADMISSIBLE });
    let relaxed = apmc_solve(&problem, &lv, ApmcMode::Deterministic, SampleKey::new(0, 0, 0))?;
    let limit = ap_limit_scheme(&problem, &lv)?;
    let diff: Vec<f64> = relaxed.values[0].iter().zip(&limit.values[0]).map(|(x, y)| x - y).collect();
    Ok(Check::at_most("ap_limit_l2_difference", l2_norm(&diff, lv.dx), 1e-6))
}

fn coupling_checks(seed: u64, n: usize) -> Result<[Check; 2]> {
    const BLOCK: usize = 1024;
    let mut time = Vec::with_capacity(n);
    let mut space_time = Vec::with_capacity(n);
    let mut id = 0u64;
    while time.len() < n || space_time.len() < n {
        let key = SampleKey::new(seed, id, 1);
        id += 1;
        if time.len() < n {
            let fine = draw_seeds(key, SeedLayout::Time { len: 2 * BLOCK });
            time.extend(coarsen_seeds_time(&fine, 2)?.seeds);
        }
        if space_time.len() < n {
            let fine = draw_seeds(key, SeedLayout::SpaceTime { cells: 64, steps: 64 });
            space_time.extend(coarsen_seeds_spacetime(&fine, 2)?.seeds);
        }
    }
    time.truncate(n);
    space_time.truncate(n);
    Ok([
        Check::at_least("coarsened_time_seeds_ks_p", ks_uniform(&time)?.p_value, 0.01),
        Check::at_least("coarsened_spacetime_seeds_ks_p", ks_uniform(&space_time)?.p_value, 0.01),
    ])
}

fn euler_balance_check() -> Result<Check> {
    let problem = EulerProblem { initial: EulerInitial::Hydrostatic { level: 8.0 }, ..EulerProblem::default() };
    let lv = build_hierarchy((0.0, 2.0), 0.125 * 0.1 * 100.0, 2, 0.125, 0.1, 0)?.level(0);
    let path = ParameterPath::constant(problem.lambda0, 1, PathKind::PiecewiseK);
    let init = problem.initial_primitive(&lv)?;
    let out = solve_euler(&problem, &lv, &path)?;
    let dev = init
        .iter()
        .enumerate()
        .map(|(i, &(rho, _, _))| (out.values[0][i] - rho).abs().max(out.values[1][i].abs()))
        .fold(0.0, f64::max);
    Ok(Check::at_most("euler_hydrostatic_deviation", dev, 1e-12))
}

fn lake_at_rest_check() -> Result<Check> {
    let problem = ShallowWaterProblem {
        initial: ShallowWaterInitial::LakeAtRest { surface: 4.0 },
        ..ShallowWaterProblem::default()
    };
    let lv = build_hierarchy((0.0, 1.0), 100.0 * 0.05 / 64.0, 2, 1.0 / 64.0, 0.05, 0)?.level(0);
    let weights = ParameterPath {
        kind: PathKind::PiecewiseK,
        k: 4,
        base: 0.0,
        amplitude: 1.0,
        law: ParameterLaw::OneSided,
        values: vec![0.9, 0.1, 0.4, 0.7],
    };
    let bottom = topography(&lv, &weights);
    let out = solve_shallow_water(&problem, &lv, &weights)?;
    let dev = (0..lv.n_cells)
        .map(|i| (out.values[0][i] + bottom[i] - 4.0).abs().max(out.values[1][i].abs()))
        .fold(0.0, f64::max);
    Ok(Check::at_most("lake_at_rest_deviation", dev, 1e-12))
}

/// Periodic injection of `values` with `stride`, starting `offset` cells in.
pub fn restrict_shifted(values: &[f64], stride: usize, offset: usize) -> Vec<f64> {
    let n = values.len();
    (0..n / stride).map(|i| values[(i * stride + offset) % n]).collect()
}

/// Coarse members of level-1 pairs against independent level-0 runs.
/// Returns the L2 distance of the means in units of its standard error.
fn telescoping_check(cfg: &ExperimentConfig) -> Result<Check> {
    let case = &cfg.case;
    let hier = case.hierarchy()?;
    let n = cfg.validate.samples;
    let cells = hier.level0.n_cells;
    let offset = cfg.validate.restriction_offset;
    let exec = executor(cfg.workers);
    let merge = |a: &mut FieldStats, b: &FieldStats| a.merge(b);
    let mut coupled = FieldStats::new(cells);
    exec.fold_ids(0..n, &mut coupled, || FieldStats::new(cells), |acc, id| {
        let (_, coarse) = sample_pair(case, &hier, 1, SampleKey::new(cfg.master_seed, id, 1))?;
        acc.accumulate(&restrict_shifted(&coarse.values[0], 1, offset), 1.0)
    }, merge)?;
    let mut plain = FieldStats::new(cells);
    exec.fold_ids(0..n, &mut plain, || FieldStats::new(cells), |acc, id| {
        let p = sample_solution(case, &hier, 0, SampleKey::new(cfg.master_seed ^ 0x5eed, id, 0))?;
        acc.accumulate(&p.values[0], 1.0)
    }, merge)?;
    let dx = hier.level0.dx;
    let diff: Vec<f64> = coupled.mean.iter().zip(&plain.mean).map(|(a, b)| a - b).collect();
    let var = (coupled.integrated_variance(dx)? + plain.integrated_variance(dx)?) / n as f64;
    let distance = l2_norm(&diff, dx);
    let sigmas = if var > 0.0 { distance / var.sqrt() } else if distance == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(Check::at_most("telescoping_coarse_mean_sigmas", sigmas, 4.0))
}

pub fn validate_invariants(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let mut checks = vec![energy_check()?, ap_limit_check()?];
    checks.extend(coupling_checks(cfg.master_seed, cfg.validate.ks_samples)?);
    checks.push(euler_balance_check()?);
    checks.push(lake_at_rest_check()?);
    checks.push(telescoping_check(cfg)?);
    Ok(ValidationReport {
        case_id: cfg.case_id.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
