//! Test-problem registry: case presets, per-level samples and coupled
//! fine/coarse corrections on the level-0 grid.

use crate::error::{Error, Result};
use crate::jinxin::{apmc_solve, mlapmc_coupled_pair, ApmcMode, JinXinParams, JinXinProblem};
use crate::levels::{build_hierarchy, inject, FieldSolution, GridHierarchy, LevelSpec};
use crate::random_inputs::{
    coarsen_seeds_time, draw_seeds, seeds_to_path, ParameterLaw, ParameterPath, PathKind,
    SampleKey, SeedArray, SeedLayout, StreamTag,
};
use crate::solvers::{
    solve_advection, solve_euler, solve_shallow_water, AdvectionProblem, EulerProblem,
    InitialProfile, ShallowWaterProblem,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Table rows reproduced by the presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "4.1")]
    AdvectionFinite,
    #[serde(rename = "4.2")]
    AdvectionWhiteNoise,
    #[serde(rename = "5.1")]
    EulerFinite,
    #[serde(rename = "5.2")]
    EulerWhiteNoise,
    #[serde(rename = "6.1")]
    ShallowWaterFinite,
    #[serde(rename = "6.2")]
    ShallowWaterWhiteNoise,
    #[serde(rename = "7.1")]
    JinXinSemiRandom,
    #[serde(rename = "7.2")]
    JinXinFullyRandom,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::AdvectionFinite,
        CaseId::AdvectionWhiteNoise,
        CaseId::EulerFinite,
        CaseId::EulerWhiteNoise,
        CaseId::ShallowWaterFinite,
        CaseId::ShallowWaterWhiteNoise,
        CaseId::JinXinSemiRandom,
        CaseId::JinXinFullyRandom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::AdvectionFinite => "4.1",
            CaseId::AdvectionWhiteNoise => "4.2",
            CaseId::EulerFinite => "5.1",
            CaseId::EulerWhiteNoise => "5.2",
            CaseId::ShallowWaterFinite => "6.1",
            CaseId::ShallowWaterWhiteNoise => "6.2",
            CaseId::JinXinSemiRandom => "7.1",
            CaseId::JinXinFullyRandom => "7.2",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown case id '{s}'")))
    }
}

/// How many independent random parameters a sample has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Randomness {
    /// `k` values on equal intervals, shared by both members of a pair.
    Finite { k: usize },
    /// One value per step (time) or per cell (space), coarsened by max-power.
    WhiteNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum Model {
    Advection {
        problem: AdvectionProblem,
        mean_speed: f64,
        amplitude: f64,
        randomness: Randomness,
    },
    Euler {
        problem: EulerProblem,
        lambda_mean: f64,
        amplitude: f64,
        randomness: Randomness,
    },
    ShallowWater {
        problem: ShallowWaterProblem,
        /// Topography weights are uniform on `[0, amplitude]`.
        amplitude: f64,
        randomness: Randomness,
    },
    JinXin {
        problem: JinXinProblem,
        mode: ApmcMode,
    },
}

impl Model {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Model::Advection { problem, .. } => problem.domain,
            Model::Euler { problem, .. } => problem.domain,
            Model::ShallowWater { problem, .. } => problem.domain,
            Model::JinXin { problem, .. } => problem.domain,
        }
    }

    /// Name of the field used as quantity of interest.
    pub fn qoi_name(&self) -> &'static str {
        match self {
            Model::Advection { .. } | Model::JinXin { .. } => "u",
            Model::Euler { .. } => "rho",
            Model::ShallowWater { .. } => "h",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case_id: Option<CaseId>,
    pub model: Model,
    pub gamma: usize,
    pub dx0: f64,
    pub kappa: f64,
    pub horizon: f64,
    pub max_level: usize,
    pub n_initial: u64,
    /// Weak order of the scheme, used by the stopping rules.
    pub alpha: f64,
    /// Replace every parameter seed by this constant (zero-variance runs).
    #[serde(default)]
    pub frozen_seed: Option<f64>,
}

/// Advection final time used by the presets.
pub const ADVECTION_HORIZON: f64 = 0.5;

fn advection(randomness: Randomness) -> Model {
    Model::Advection {
        problem: AdvectionProblem {
            initial: InitialProfile::SinPi,
            domain: (-1.0, 1.0),
        },
        mean_speed: 1.0,
        amplitude: 1.0,
        randomness,
    }
}

fn euler(randomness: Randomness) -> Model {
    Model::Euler {
        problem: EulerProblem::default(),
        lambda_mean: 4.0 / 3.0,
        amplitude: 1.0 / 3.0,
        randomness,
    }
}

fn shallow_water(randomness: Randomness) -> Model {
    Model::ShallowWater {
        problem: ShallowWaterProblem::default(),
        amplitude: 1.0,
        randomness,
    }
}

fn jinxin(mode: ApmcMode) -> Model {
    Model::JinXin {
        problem: JinXinProblem {
            params: JinXinParams {
                a: 1.0,
                b: 2.0,
                epsilon: 1.0,
                enforce_subcharacteristic: false,
            },
            initial_u: InitialProfile::SinPi,
            initial_v: InitialProfile::Constant(0.0),
            domain: (-1.0, 1.0),
        },
        mode,
    }
}

impl CaseConfig {
    /// Preset for a table row. Finite-randomness rows use `K = 1`.
    pub fn preset(case_id: CaseId) -> Self {
        let finite = Randomness::Finite { k: 1 };
        let (model, dx0, kappa, horizon) = match case_id {
            CaseId::AdvectionFinite => (advection(finite), 1.0 / 32.0, 0.5, ADVECTION_HORIZON),
            CaseId::AdvectionWhiteNoise => {
                (advection(Randomness::WhiteNoise), 1.0 / 32.0, 0.5, ADVECTION_HORIZON)
            }
            CaseId::EulerFinite => (euler(finite), 0.25, 0.1, 2.0),
            CaseId::EulerWhiteNoise => (euler(Randomness::WhiteNoise), 0.25, 0.1, 2.0),
            CaseId::ShallowWaterFinite => (shallow_water(finite), 1.0 / 64.0, 0.05, 0.1),
            CaseId::ShallowWaterWhiteNoise => {
                (shallow_water(Randomness::WhiteNoise), 1.0 / 64.0, 0.05, 0.1)
            }
            CaseId::JinXinSemiRandom => (jinxin(ApmcMode::SemiRandom), 1.0 / 32.0, 0.5, 1.0),
            CaseId::JinXinFullyRandom => (jinxin(ApmcMode::FullyRandom), 1.0 / 32.0, 0.5, 1.0),
        };
        Self {
            case_id: Some(case_id),
            model,
            gamma: 2,
            dx0,
            kappa,
            horizon,
            max_level: 8,
            n_initial: 500,
            alpha: 1.0,
            frozen_seed: None,
        }
    }

    /// Sets `K` for finite-randomness models; no effect on white noise.
    pub fn with_k(mut self, k: usize) -> Self {
        match &mut self.model {
            Model::Advection { randomness, .. }
            | Model::Euler { randomness, .. }
            | Model::ShallowWater { randomness, .. } => {
                if let Randomness::Finite { k: old } = randomness {
                    *old = k;
                }
            }
            Model::JinXin { .. } => {}
        }
        self
    }

    pub fn hierarchy(&self) -> Result<GridHierarchy> {
        if self.n_initial < 2 {
            return Err(Error::Config("at least 2 initial samples per level are needed".into()));
        }
        if let Some(s) = self.frozen_seed {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("frozen seed {s} outside [0, 1]")));
            }
        }
        if let Model::JinXin { problem, .. } = &self.model {
            problem.params.validate()?;
        }
        build_hierarchy(
            self.model.domain(),
            self.horizon,
            self.gamma,
            self.dx0,
            self.kappa,
            self.max_level,
        )
    }

    pub fn label(&self) -> String {
        self.case_id.map_or_else(|| "custom".to_string(), |c| c.to_string())
    }
}

/// A sampled parameter path for the fine member and, when the levels are
/// coupled by coarsening, a separate coarse path.
struct Paths {
    fine: ParameterPath,
    coarse: Option<ParameterPath>,
}

fn param_seeds(cfg: &CaseConfig, key: SampleKey, layout: SeedLayout) -> SeedArray {
    match cfg.frozen_seed {
        Some(c) => SeedArray {
            seeds: vec![c; layout.len()],
            layout,
            level_index: key.level_index,
        },
        None => draw_seeds(key.with_tag(StreamTag::Param), layout),
    }
}

enum Axis {
    Time,
    Space,
}

struct ParamLaw {
    base: f64,
    amplitude: f64,
    law: ParameterLaw,
    randomness: Randomness,
    axis: Axis,
}

fn sample_paths(
    cfg: &CaseConfig,
    level: &LevelSpec,
    key: SampleKey,
    spec: ParamLaw,
    coupled: bool,
) -> Result<Paths> {
    let ParamLaw {
        base,
        amplitude,
        law,
        randomness,
        axis,
    } = spec;
    match randomness {
        Randomness::Finite { k } => {
            let layout = match axis {
                Axis::Time => SeedLayout::Time { len: k },
                Axis::Space => SeedLayout::Space { len: k },
            };
            let seeds = param_seeds(cfg, key, layout);
            let fine = seeds_to_path(&seeds, PathKind::PiecewiseK, base, amplitude, law, k)?;
            Ok(Paths { fine, coarse: None })
        }
        Randomness::WhiteNoise => {
            let (layout, kind) = match axis {
                Axis::Time => (SeedLayout::white_noise_time(level), PathKind::WhiteNoiseTime),
                Axis::Space => (SeedLayout::white_noise_space(level), PathKind::WhiteNoiseSpace),
            };
            let seeds = param_seeds(cfg, key, layout);
            let fine = seeds_to_path(&seeds, kind, base, amplitude, law, seeds.len())?;
            let coarse = if coupled {
                let c = coarsen_seeds_time(&seeds, cfg.gamma)?;
                Some(seeds_to_path(&c, kind, base, amplitude, law, c.len())?)
            } else {
                None
            };
            Ok(Paths { fine, coarse })
        }
    }
}

fn jinxin_mode(cfg: &CaseConfig, mode: ApmcMode) -> ApmcMode {
    if cfg.frozen_seed.is_some() {
        ApmcMode::Deterministic
    } else {
        mode
    }
}

fn solve_on(model: &Model, level: &LevelSpec, path: &ParameterPath) -> Result<FieldSolution> {
    match model {
        Model::Advection { problem, .. } => solve_advection(problem, level, path),
        Model::Euler { problem, .. } => solve_euler(problem, level, path),
        Model::ShallowWater { problem, .. } => solve_shallow_water(problem, level, path),
        Model::JinXin { .. } => unreachable!("Jin-Xin samples are not parameter driven"),
    }
}

fn paths_for(
    cfg: &CaseConfig,
    level: &LevelSpec,
    key: SampleKey,
    coupled: bool,
) -> Result<Paths> {
    let spec = match &cfg.model {
        Model::Advection {
            mean_speed,
            amplitude,
            randomness,
            ..
        } => ParamLaw {
            base: *mean_speed,
            amplitude: *amplitude,
            law: ParameterLaw::Symmetric,
            randomness: *randomness,
            axis: Axis::Time,
        },
        Model::Euler {
            lambda_mean,
            amplitude,
            randomness,
            ..
        } => ParamLaw {
            base: *lambda_mean,
            amplitude: *amplitude,
            law: ParameterLaw::Symmetric,
            randomness: *randomness,
            axis: Axis::Time,
        },
        Model::ShallowWater {
            amplitude, randomness, ..
        } => ParamLaw {
            base: 0.0,
            amplitude: *amplitude,
            law: ParameterLaw::OneSided,
            randomness: *randomness,
            axis: Axis::Space,
        },
        Model::JinXin { .. } => unreachable!("Jin-Xin samples are not parameter driven"),
    };
    sample_paths(cfg, level, key, spec, coupled)
}

fn qoi_on_level0(field: &FieldSolution, stride: usize) -> Vec<f64> {
    inject(&field.values[0], stride)
}

/// One single-level sample `P_l` on `level`, full resolution.
pub fn sample_solution(
    cfg: &CaseConfig,
    hier: &GridHierarchy,
    level: usize,
    key: SampleKey,
) -> Result<FieldSolution> {
    let lv = hier.level(level);
    match &cfg.model {
        Model::JinXin { problem, mode } => apmc_solve(problem, &lv, jinxin_mode(cfg, *mode), key),
        model => {
            let paths = paths_for(cfg, &lv, key, false)?;
            solve_on(model, &lv, &paths.fine)
        }
    }
}

/// The two members of a coupled pair, fine first.
pub fn sample_pair(
    cfg: &CaseConfig,
    hier: &GridHierarchy,
    level: usize,
    key: SampleKey,
) -> Result<(FieldSolution, FieldSolution)> {
    if level == 0 {
        return Err(Error::Argument("level 0 has no coarse partner".into()));
    }
    let fine_lv = hier.level(level);
    let coarse_lv = hier.level(level - 1);
    match &cfg.model {
        Model::JinXin { problem, mode } => mlapmc_coupled_pair(
            problem,
            &fine_lv,
            &coarse_lv,
            cfg.gamma,
            jinxin_mode(cfg, *mode),
            key,
        ),
        model => {
            let paths = paths_for(cfg, &fine_lv, key, true)?;
            let fine = solve_on(model, &fine_lv, &paths.fine)?;
            let coarse_path = paths.coarse.as_ref().unwrap_or(&paths.fine);
            let coarse = solve_on(model, &coarse_lv, coarse_path)?;
            Ok((fine, coarse))
        }
    }
}

/// A correction sample and the fine member it came from, both restricted
/// to the level-0 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSample {
    pub correction: Vec<f64>,
    pub fine: Vec<f64>,
}

/// `P_l - P_{l-1}` from one coupled pair (`P_0` on level 0).
pub fn correction_sample(
    cfg: &CaseConfig,
    hier: &GridHierarchy,
    level: usize,
    key: SampleKey,
) -> Result<CorrectionSample> {
    let stride = |l: usize| cfg.gamma.pow(l as u32);
    if level == 0 {
        let p = sample_solution(cfg, hier, 0, key)?;
        let q = qoi_on_level0(&p, 1);
        return Ok(CorrectionSample {
            correction: q.clone(),
            fine: q,
        });
    }
    let (fine, coarse) = sample_pair(cfg, hier, level, key)?;
    let f = qoi_on_level0(&fine, stride(level));
    let c = qoi_on_level0(&coarse, stride(level - 1));
    Ok(CorrectionSample {
        correction: f.iter().zip(&c).map(|(a, b)| a - b).collect(),
        fine: f,
    })
}
