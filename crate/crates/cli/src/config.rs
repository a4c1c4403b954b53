//! Experiment configuration: a TOML file layered over per-case presets.

use anyhow::{bail, Context, Result};
use mlmc_hyperbolic::cases::{CaseConfig, CaseId, Model, Randomness};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Accuracy sweep used by the paper for the advection and Jin-Xin rows.
pub const PAPER_DELTAS: [f64; 5] = [0.02, 0.01, 0.005, 0.002, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Mc,
    Mlmc,
    Both,
}

impl MethodChoice {
    pub fn runs_mlmc(self) -> bool {
        matches!(self, MethodChoice::Mlmc | MethodChoice::Both)
    }

    pub fn runs_mc(self) -> bool {
        matches!(self, MethodChoice::Mc | MethodChoice::Both)
    }
}

/// Hierarchy overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyFile {
    pub gamma: Option<usize>,
    pub dx0: Option<f64>,
    pub kappa: Option<f64>,
    pub horizon: Option<f64>,
    pub max_level: Option<usize>,
    pub n_initial: Option<u64>,
    pub alpha: Option<f64>,
}

/// Physical parameter overrides; which keys apply depends on the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsFile {
    pub k: Option<usize>,
    pub mean_speed: Option<f64>,
    pub lambda_mean: Option<f64>,
    pub amplitude: Option<f64>,
    pub gravity: Option<f64>,
    pub eos_constant: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub epsilon: Option<f64>,
    pub enforce_subcharacteristic: Option<bool>,
    pub frozen_seed: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub top_level: Option<usize>,
    pub samples: Option<u64>,
    pub fit_from: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateFile {
    pub samples: Option<u64>,
    pub ks_samples: Option<usize>,
    /// Shifts the restriction of coarse pair members by this many cells.
    pub restriction_offset: Option<usize>,
}

/// On-disk layout of an experiment file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub case: Option<String>,
    pub method: Option<MethodChoice>,
    pub deltas: Option<Vec<f64>>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub hierarchy: HierarchyFile,
    #[serde(default)]
    pub physics: PhysicsFile,
    #[serde(default)]
    pub profile: ProfileFile,
    #[serde(default)]
    pub validate: ValidateFile,
}

/// Fixed-sample variance table settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub top_level: usize,
    pub samples: u64,
    /// First level entering the rate fits.
    pub fit_from: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateSettings {
    pub samples: u64,
    pub ks_samples: usize,
    pub restriction_offset: usize,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        Self {
            samples: 2000,
            ks_samples: 100_000,
            restriction_offset: 0,
        }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case_id: CaseId,
    pub method: MethodChoice,
    pub deltas: Vec<f64>,
    pub master_seed: u64,
    pub workers: usize,
    pub case: CaseConfig,
    pub profile: ProfileSettings,
    pub validate: ValidateSettings,
    /// Why the preset sweep stops short of the paper's smallest delta.
    pub delta_floor_note: Option<String>,
}

struct Preset {
    deltas: Vec<f64>,
    profile: ProfileSettings,
    note: Option<&'static str>,
}

fn preset(case_id: CaseId) -> Preset {
    let profile = |top_level, samples, fit_from| ProfileSettings { top_level, samples, fit_from };
    match case_id {
        CaseId::AdvectionFinite | CaseId::AdvectionWhiteNoise => Preset {
            deltas: PAPER_DELTAS.to_vec(),
            profile: profile(4, 500, 0),
            note: None,
        },
        CaseId::EulerFinite | CaseId::EulerWhiteNoise => Preset {
            deltas: vec![0.02, 0.01, 0.005],
            profile: profile(6, 200, 3),
            note: Some("Euler sweeps stop at delta = 0.005 to bound runtime"),
        },
        CaseId::ShallowWaterFinite | CaseId::ShallowWaterWhiteNoise => Preset {
            deltas: vec![0.02, 0.01, 0.005],
            profile: profile(4, 500, 0),
            note: Some("shallow-water sweeps stop at delta = 0.005 to bound runtime"),
        },
        CaseId::JinXinSemiRandom => Preset {
            deltas: vec![0.04, 0.02, 0.01],
            profile: profile(4, 500, 0),
            note: Some("semi-random sweeps stop at delta = 0.01; single-level MC refines to level 6 there"),
        },
        CaseId::JinXinFullyRandom => Preset {
            deltas: vec![0.16, 0.08, 0.04],
            profile: profile(4, 500, 0),
            note: Some(
                "fully random sweeps stop at delta = 0.04 with max_level 4; level means are \
                 uncorrelated, so single-level MC rarely meets its stopping rule",
            ),
        },
    }
}

impl ExperimentConfig {
    /// Preset for a table row with the paper's parameters.
    pub fn preset(case_id: CaseId) -> Self {
        let p = preset(case_id);
        let mut case = CaseConfig::preset(case_id);
        if case_id == CaseId::JinXinFullyRandom {
            case.max_level = 4;
        }
        Self {
            case_id,
            method: MethodChoice::Both,
            deltas: p.deltas,
            master_seed: 11,
            workers: 0,
            case,
            profile: p.profile,
            validate: ValidateSettings::default(),
            delta_floor_note: p.note.map(str::to_string),
        }
    }

    pub fn load(path: &Path, case_override: Option<CaseId>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text, case_override)
    }

    pub fn from_toml(text: &str, case_override: Option<CaseId>) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text).context("parsing config")?;
        Self::resolve(file, case_override)
    }

    pub fn resolve(file: ExperimentFile, case_override: Option<CaseId>) -> Result<Self> {
        let case_id = match (case_override, &file.case) {
            (Some(c), _) => c,
            (None, Some(s)) => s.parse()?,
            (None, None) => bail!("config needs a `case` (one of 4.1 .. 7.2)"),
        };
        let mut cfg = Self::preset(case_id);
        if let Some(m) = file.method {
            cfg.method = m;
        }
        if let Some(d) = file.deltas {
            if d != cfg.deltas {
                cfg.delta_floor_note = None;
            }
            cfg.deltas = d;
        }
        if let Some(s) = file.master_seed {
            cfg.master_seed = s;
        }
        if let Some(w) = file.workers {
            cfg.workers = w;
        }
        apply_hierarchy(&mut cfg.case, &file.hierarchy);
        apply_physics(&mut cfg.case, &file.physics)?;
        let p = &file.profile;
        cfg.profile.top_level = p.top_level.unwrap_or(cfg.profile.top_level);
        cfg.profile.samples = p.samples.unwrap_or(cfg.profile.samples);
        cfg.profile.fit_from = p.fit_from.unwrap_or(cfg.profile.fit_from);
        let v = &file.validate;
        cfg.validate.samples = v.samples.unwrap_or(cfg.validate.samples);
        cfg.validate.ks_samples = v.ks_samples.unwrap_or(cfg.validate.ks_samples);
        cfg.validate.restriction_offset =
            v.restriction_offset.unwrap_or(cfg.validate.restriction_offset);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.deltas.is_empty() {
            bail!("deltas must not be empty");
        }
        if let Some(d) = self.deltas.iter().find(|d| d.is_nan() || **d <= 0.0) {
            bail!("deltas must be positive, got {d}");
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            bail!("deltas must be strictly decreasing, got {:?}", self.deltas);
        }
        if self.profile.samples < 2 {
            bail!("profile needs at least 2 samples per level");
        }
        if self.profile.top_level > self.case.max_level {
            bail!(
                "profile top level {} exceeds max_level {}",
                self.profile.top_level,
                self.case.max_level
            );
        }
        if self.profile.top_level < self.profile.fit_from + 2 {
            bail!("rate fits need at least 3 levels from fit_from");
        }
        self.case.hierarchy()?;
        Ok(())
    }
}

fn apply_hierarchy(case: &mut CaseConfig, h: &HierarchyFile) {
    case.gamma = h.gamma.unwrap_or(case.gamma);
    case.dx0 = h.dx0.unwrap_or(case.dx0);
    case.kappa = h.kappa.unwrap_or(case.kappa);
    case.horizon = h.horizon.unwrap_or(case.horizon);
    case.max_level = h.max_level.unwrap_or(case.max_level);
    case.n_initial = h.n_initial.unwrap_or(case.n_initial);
    case.alpha = h.alpha.unwrap_or(case.alpha);
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_physics(case: &mut CaseConfig, p: &PhysicsFile) -> Result<()> {
    case.frozen_seed = p.frozen_seed.or(case.frozen_seed);
    let mut unused: Vec<&str> = Vec::new();
    let mut reject = |name: &'static str, present: bool| {
        if present {
            unused.push(name);
        }
    };
    match &mut case.model {
        Model::Advection { mean_speed, amplitude, randomness, .. } => {
            set(mean_speed, p.mean_speed);
            set(amplitude, p.amplitude);
            set_k(randomness, p.k, &mut reject);
            reject("lambda_mean", p.lambda_mean.is_some());
            reject("gravity", p.gravity.is_some());
            reject("eos_constant", p.eos_constant.is_some());
            reject_jinxin(p, &mut reject);
        }
        Model::Euler { problem, lambda_mean, amplitude, randomness } => {
            set(lambda_mean, p.lambda_mean);
            set(amplitude, p.amplitude);
            set(&mut problem.gravity, p.gravity);
            set(&mut problem.eos_constant, p.eos_constant);
            set_k(randomness, p.k, &mut reject);
            reject("mean_speed", p.mean_speed.is_some());
            reject_jinxin(p, &mut reject);
        }
        Model::ShallowWater { problem, amplitude, randomness } => {
            set(amplitude, p.amplitude);
            set(&mut problem.gravity, p.gravity);
            set_k(randomness, p.k, &mut reject);
            reject("mean_speed", p.mean_speed.is_some());
            reject("lambda_mean", p.lambda_mean.is_some());
            reject("eos_constant", p.eos_constant.is_some());
            reject_jinxin(p, &mut reject);
        }
        Model::JinXin { problem, .. } => {
            let params = &mut problem.params;
            set(&mut params.a, p.a);
            set(&mut params.b, p.b);
            set(&mut params.epsilon, p.epsilon);
            set(&mut params.enforce_subcharacteristic, p.enforce_subcharacteristic);
            for (name, present) in [
                ("k", p.k.is_some()),
                ("mean_speed", p.mean_speed.is_some()),
                ("lambda_mean", p.lambda_mean.is_some()),
                ("amplitude", p.amplitude.is_some()),
                ("gravity", p.gravity.is_some()),
                ("eos_constant", p.eos_constant.is_some()),
            ] {
                reject(name, present);
            }
        }
    }
    if !unused.is_empty() {
        bail!("physics keys {unused:?} do not apply to this case");
    }
    Ok(())
}

fn set_k(randomness: &mut Randomness, k: Option<usize>, reject: &mut impl FnMut(&'static str, bool)) {
    match (randomness, k) {
        (Randomness::Finite { k: slot }, Some(k)) => *slot = k,
        (Randomness::WhiteNoise, Some(_)) => reject("k", true),
        _ => {}
    }
}

fn reject_jinxin(p: &PhysicsFile, reject: &mut impl FnMut(&'static str, bool)) {
    reject("a", p.a.is_some());
    reject("b", p.b.is_some());
    reject("epsilon", p.epsilon.is_some());
    reject("enforce_subcharacteristic", p.enforce_subcharacteristic.is_some());
}
