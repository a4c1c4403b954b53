//! Adaptive multilevel and single-level Monte Carlo loops.

use crate::cases::{correction_sample, sample_solution, CaseConfig, CorrectionSample};
use crate::error::{Error, Result};
use crate::estimators::{
    estimator_variance, l2_norm, mc_allocation, optimal_allocation, stopping_mc, stopping_mlmc,
    FieldStats, LevelStats,
};
use crate::exec::Executor;
use crate::levels::{inject, pair_cost, single_cost, GridHierarchy};
use crate::random_inputs::SampleKey;
use serde::{Deserialize, Serialize};

/// Space and time are refined together.
pub const COST_DIMS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mlmc,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mlmc => "mlmc",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub n_samples: u64,
    /// Integrated variance driving the allocation (correction for MLMC,
    /// solution for MC).
    pub variance: f64,
    /// Integrated variance of the single-level solution on this level.
    pub variance_solution: f64,
    pub unit_cost: f64,
    /// Norm entering the stopping rule on this level (0 on level 0).
    pub stopping_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub method: Method,
    pub delta: f64,
    pub finest_level: usize,
    pub per_level: Vec<LevelReport>,
    pub qoi_field: Vec<f64>,
    pub total_cost: f64,
    pub converged: bool,
    /// Estimator variance `sum N^-1 V` over the levels in the estimator.
    pub estimator_variance: f64,
}

impl EstimatorReport {
    /// `true` when the sampling error is within `delta^2 / 2`.
    pub fn within_budget(&self) -> bool {
        self.estimator_variance <= 0.5 * self.delta * self.delta * (1.0 + 1e-9)
    }
}

/// Anything the adaptive loops can draw level samples from.
pub trait LevelSampler: Sync {
    /// Cells of the level-0 grid.
    fn cells(&self) -> usize;
    /// Level-0 mesh size used in norms.
    fn dx0(&self) -> f64;
    fn gamma(&self) -> usize;
    fn alpha(&self) -> f64;
    fn max_level(&self) -> usize;
    fn n_initial(&self) -> u64;
    /// Coupled correction sample on `level`.
    fn correction(&self, level: usize, key: SampleKey) -> Result<CorrectionSample>;
    /// Single-level solution sample on `level`, on the level-0 grid.
    fn solution(&self, level: usize, key: SampleKey) -> Result<Vec<f64>>;
}

/// A case configuration bound to its hierarchy.
#[derive(Debug, Clone)]
pub struct CaseSampler {
    pub config: CaseConfig,
    pub hierarchy: GridHierarchy,
}

impl CaseSampler {
    pub fn new(config: CaseConfig) -> Result<Self> {
        let hierarchy = config.hierarchy()?;
        Ok(Self { config, hierarchy })
    }
}

impl LevelSampler for CaseSampler {
    fn cells(&self) -> usize {
        self.hierarchy.level0.n_cells
    }
    fn dx0(&self) -> f64 {
        self.hierarchy.level0.dx
    }
    fn gamma(&self) -> usize {
        self.config.gamma
    }
    fn alpha(&self) -> f64 {
        self.config.alpha
    }
    fn max_level(&self) -> usize {
        self.config.max_level
    }
    fn n_initial(&self) -> u64 {
        self.config.n_initial
    }
    fn correction(&self, level: usize, key: SampleKey) -> Result<CorrectionSample> {
        correction_sample(&self.config, &self.hierarchy, level, key)
    }
    fn solution(&self, level: usize, key: SampleKey) -> Result<Vec<f64>> {
        let p = sample_solution(&self.config, &self.hierarchy, level, key)?;
        Ok(inject(&p.values[0], self.config.gamma.pow(level as u32)))
    }
}

/// Runs `f` and, on failure, once more with the retry key.
fn with_retry<T>(key: SampleKey, level: usize, f: impl Fn(SampleKey) -> Result<T>) -> Result<T> {
    f(key).or_else(|_| {
        f(key.retry()).map_err(|e| Error::Sample {
            sample_id: key.sample_id,
            level,
            source: Box::new(e),
        })
    })
}

/// Single-level samples draw from the level-0 streams on every level, so
/// sample `n` sees the same random inputs wherever its length allows.
fn mc_key(master_seed: u64, id: u64) -> SampleKey {
    SampleKey::new(master_seed, id, 0)
}

fn draw_corrections<S: LevelSampler>(
    sampler: &S,
    exec: &Executor,
    master_seed: u64,
    stats: &mut LevelStats,
    upto: u64,
) -> Result<()> {
    let have = stats.n_samples();
    if upto <= have {
        return Ok(());
    }
    let level = stats.level_index;
    let cells = sampler.cells();
    let cost = stats.unit_cost;
    exec.fold_ids(
        have..upto,
        stats,
        || LevelStats::new(level, cells, cost),
        |acc, id| {
            let s = with_retry(SampleKey::new(master_seed, id, level), level, |k| {
                sampler.correction(level, k)
            })?;
            acc.stats_correction.accumulate(&s.correction, cost)?;
            acc.stats_solution.accumulate(&s.fine, 0.0)
        },
        |into, part| into.merge(part),
    )?;
    stats.refresh(sampler.dx0())
}

fn draw_solutions<S: LevelSampler>(
    sampler: &S,
    exec: &Executor,
    master_seed: u64,
    level: usize,
    stats: &mut FieldStats,
    cost: f64,
    upto: u64,
) -> Result<()> {
    if upto <= stats.n {
        return Ok(());
    }
    let cells = sampler.cells();
    exec.fold_ids(
        stats.n..upto,
        stats,
        || FieldStats::new(cells),
        |acc, id| {
            let s = with_retry(mc_key(master_seed, id), level, |k| sampler.solution(level, k))?;
            acc.accumulate(&s, cost)
        },
        |into, part| into.merge(part),
    )
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Adaptive MLMC: add levels until the finest mean correction passes the
/// bias test, keeping the sampling error within `delta^2 / 2`.
pub fn run_mlmc<S: LevelSampler>(
    sampler: &S,
    delta: f64,
    master_seed: u64,
    exec: &Executor,
) -> Result<EstimatorReport> {
    check_delta(delta)?;
    let gamma = sampler.gamma();
    let dx0 = sampler.dx0();
    let floor = sampler.n_initial();
    let mut levels: Vec<LevelStats> = Vec::new();
    let mut converged = false;

    for l in 0..=sampler.max_level() {
        let mut stats = LevelStats::new(l, sampler.cells(), pair_cost(l, gamma, COST_DIMS));
        draw_corrections(sampler, exec, master_seed, &mut stats, floor)?;
        levels.push(stats);

        loop {
            let inputs: Vec<(f64, f64)> = levels
                .iter()
                .map(|s| (s.scalar_variance_correction, s.unit_cost))
                .collect();
            let plan = optimal_allocation(&inputs, delta, floor)?;
            let mut topped_up = false;
            for (s, &want) in levels.iter_mut().zip(&plan.n_per_level) {
                if want > s.n_samples() {
                    draw_corrections(sampler, exec, master_seed, s, want)?;
                    topped_up = true;
                }
            }
            if !topped_up {
                break;
            }
        }

        if l >= 1 && stopping_mlmc(&levels[l].stats_correction.mean, dx0, gamma, sampler.alpha(), delta) {
            converged = true;
            break;
        }
    }

    let mut qoi = vec![0.0; sampler.cells()];
    for s in &levels {
        for (q, m) in qoi.iter_mut().zip(&s.stats_correction.mean) {
            *q += m;
        }
    }
    let variances: Vec<f64> = levels.iter().map(|s| s.scalar_variance_correction).collect();
    let counts: Vec<u64> = levels.iter().map(|s| s.n_samples()).collect();
    let per_level = levels
        .iter()
        .map(|s| LevelReport {
            level: s.level_index,
            n_samples: s.n_samples(),
            variance: s.scalar_variance_correction,
            variance_solution: s.scalar_variance_solution,
            unit_cost: s.unit_cost,
            stopping_norm: if s.level_index == 0 {
                0.0
            } else {
                l2_norm(&s.stats_correction.mean, dx0)
            },
        })
        .collect();
    Ok(EstimatorReport {
        method: Method::Mlmc,
        delta,
        finest_level: levels.len() - 1,
        per_level,
        qoi_field: qoi,
        total_cost: levels.iter().map(|s| s.n_samples() as f64 * s.unit_cost).sum(),
        converged,
        estimator_variance: estimator_variance(&variances, &counts),
    })
}

/// Adaptive single-level MC: refine until consecutive level means agree,
/// sampling each level to `N = 2 delta^-2 V`.
pub fn run_mc<S: LevelSampler>(
    sampler: &S,
    delta: f64,
    master_seed: u64,
    exec: &Executor,
) -> Result<EstimatorReport> {
    check_delta(delta)?;
    let gamma = sampler.gamma();
    let dx0 = sampler.dx0();
    let floor = sampler.n_initial();
    let mut levels: Vec<(FieldStats, f64, f64)> = Vec::new();
    let mut reports = Vec::new();
    let mut converged = false;

    for l in 0..=sampler.max_level() {
        let cost = single_cost(l, gamma, COST_DIMS);
        let mut stats = FieldStats::new(sampler.cells());
        draw_solutions(sampler, exec, master_seed, l, &mut stats, cost, floor)?;
        let mut variance = stats.integrated_variance(dx0)?;
        loop {
            let want = mc_allocation(variance, delta, floor)?;
            if want <= stats.n {
                break;
            }
            draw_solutions(sampler, exec, master_seed, l, &mut stats, cost, want)?;
            variance = stats.integrated_variance(dx0)?;
        }
        let norm = match levels.last() {
            Some((prev, _, _)) => {
                let d: Vec<f64> = stats.mean.iter().zip(&prev.mean).map(|(a, b)| a - b).collect();
                l2_norm(&d, dx0)
            }
            None => 0.0,
        };
        reports.push(LevelReport {
            level: l,
            n_samples: stats.n,
            variance,
            variance_solution: variance,
            unit_cost: cost,
            stopping_norm: norm,
        });
        let stop = match levels.last() {
            Some((prev, _, _)) => stopping_mc(&stats.mean, &prev.mean, dx0, gamma, sampler.alpha(), delta),
            None => false,
        };
        levels.push((stats, variance, cost));
        if stop {
            converged = true;
            break;
        }
    }

    let (finest, variance, _) = levels.last().expect("at least one level");
    Ok(EstimatorReport {
        method: Method::Mc,
        delta,
        finest_level: levels.len() - 1,
        per_level: reports,
        qoi_field: finest.mean.clone(),
        total_cost: levels.iter().map(|(s, _, c)| s.n as f64 * c).sum(),
        converged,
        estimator_variance: variance / finest.n as f64,
    })
}

/// Fixed-sample variance table across levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub level: usize,
    pub var_solution: f64,
    pub var_correction: f64,
    pub n_samples: u64,
    /// L2 norm of the mean correction.
    pub mean_correction_norm: f64,
}

/// Integrated variances of `P_l` and `P_l - P_{l-1}` from `n` coupled
/// samples on each of `levels`.
pub fn variance_profile<S: LevelSampler>(
    sampler: &S,
    levels: std::ops::RangeInclusive<usize>,
    n: u64,
    master_seed: u64,
    exec: &Executor,
) -> Result<Vec<VarianceRow>> {
    let gamma = sampler.gamma();
    levels
        .map(|l| {
            let mut stats = LevelStats::new(l, sampler.cells(), pair_cost(l, gamma, COST_DIMS));
            draw_corrections(sampler, exec, master_seed, &mut stats, n)?;
            Ok(VarianceRow {
                level: l,
                var_solution: stats.scalar_variance_solution,
                var_correction: stats.scalar_variance_correction,
                n_samples: stats.n_samples(),
                mean_correction_norm: l2_norm(&stats.stats_correction.mean, sampler.dx0()),
            })
        })
        .collect()
}

/// Scalar level model with prescribed bias and variance decay. Each sample
/// is its mean plus a deterministic `+-` spread alternating with the sample
/// id, so sample means are exact up to one unpaired sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLevels {
    pub gamma: usize,
    /// `E[P_l] = limit + bias_const * gamma^(-alpha l)`.
    pub limit: f64,
    pub bias_const: f64,
    pub alpha: f64,
    /// `Var[Y_l] = var_const * gamma^(-beta l)`.
    pub var_const: f64,
    pub beta: f64,
    /// `Var[P_l] = var0_const * gamma^(-beta0 l)`.
    pub var0_const: f64,
    pub beta0: f64,
    pub max_level: usize,
    pub n_initial: u64,
}

impl SyntheticLevels {
    fn g(&self, order: f64, l: usize) -> f64 {
        (self.gamma as f64).powf(-order * l as f64)
    }

    pub fn mean_solution(&self, l: usize) -> f64 {
        self.limit + self.bias_const * self.g(self.alpha, l)
    }

    pub fn mean_correction(&self, l: usize) -> f64 {
        if l == 0 {
            self.mean_solution(0)
        } else {
            self.mean_solution(l) - self.mean_solution(l - 1)
        }
    }

    pub fn var_correction(&self, l: usize) -> f64 {
        if l == 0 {
            self.var_solution(0)
        } else {
            self.var_const * self.g(self.beta, l)
        }
    }

    pub fn var_solution(&self, l: usize) -> f64 {
        self.var0_const * self.g(self.beta0, l)
    }

    fn sign(id: u64) -> f64 {
        if id.is_multiple_of(2) { 1.0 } else { -1.0 }
    }
}

impl LevelSampler for SyntheticLevels {
    fn cells(&self) -> usize {
        1
    }
    fn dx0(&self) -> f64 {
        1.0
    }
    fn gamma(&self) -> usize {
        self.gamma
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn max_level(&self) -> usize {
        self.max_level
    }
    fn n_initial(&self) -> u64 {
        self.n_initial
    }
    fn correction(&self, level: usize, key: SampleKey) -> Result<CorrectionSample> {
        let s = Self::sign(key.sample_id);
        Ok(CorrectionSample {
            correction: vec![self.mean_correction(level) + s * self.var_correction(level).sqrt()],
            fine: vec![self.mean_solution(level) + s * self.var_solution(level).sqrt()],
        })
    }
    fn solution(&self, level: usize, key: SampleKey) -> Result<Vec<f64>> {
        Ok(vec![self.mean_solution(level) + Self::sign(key.sample_id) * self.var_solution(level).sqrt()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::stopping_threshold;

    fn model() -> SyntheticLevels {
        SyntheticLevels {
            gamma: 2,
            limit: 1.0,
            bias_const: 0.3,
            alpha: 1.0,
            var_const: 1.0,
            beta: 2.0,
            var0_const: 0.5,
            beta0: 0.0,
            max_level: 12,
            n_initial: 20,
        }
    }

    /// Smallest `l >= 1` whose sample mean correction passes the bias test.
    /// With `N` samples the mean is exact for even `N` and off by `sqrt(V)/N`
    /// for odd `N`.
    fn predicted_finest(m: &SyntheticLevels, delta: f64, counts: &[u64]) -> usize {
        let tol = stopping_threshold(m.gamma, m.alpha, delta);
        (1..counts.len())
            .find(|&l| {
                let n = counts[l];
                let unpaired = if n % 2 == 1 { m.var_correction(l).sqrt() / n as f64 } else { 0.0 };
                (m.mean_correction(l) + unpaired).abs() <= tol
            })
            .unwrap()
    }

    #[test]
    fn mlmc_matches_closed_form() {
        let m = model();
        let exec = Executor::sequential();
        for delta in [0.05, 0.02, 0.01, 0.005, 0.002] {
            let r = run_mlmc(&m, delta, 1, &exec).unwrap();
            assert!(r.converged);
            let counts: Vec<u64> = r.per_level.iter().map(|l| l.n_samples).collect();
            assert_eq!(r.finest_level, predicted_finest(&m, delta, &counts), "delta {delta}");
            assert!(r.within_budget());
            let cost: f64 = r.per_level.iter().map(|l| l.n_samples as f64 * l.unit_cost).sum();
            assert_eq!(cost, r.total_cost);
        }
    }

    #[test]
    fn mlmc_cost_is_monotone_in_delta() {
        let m = model();
        let exec = Executor::sequential();
        let costs: Vec<f64> = [0.05, 0.02, 0.01, 0.005]
            .iter()
            .map(|&d| run_mlmc(&m, d, 1, &exec).unwrap().total_cost)
            .collect();
        assert!(costs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn large_delta_stops_at_first_level() {
        let m = model();
        let r = run_mlmc(&m, 1.0, 1, &Executor::sequential()).unwrap();
        assert_eq!(r.finest_level, 1);
        assert!(r.per_level.iter().all(|l| l.n_samples == m.n_initial));
    }

    #[test]
    fn mc_budget_and_stop() {
        let m = model();
        let r = run_mc(&m, 0.02, 1, &Executor::sequential()).unwrap();
        assert!(r.converged);
        assert!(r.within_budget());
        let expected = stopping_threshold(2, 1.0, 0.02);
        let l = r.finest_level;
        assert!((m.mean_solution(l) - m.mean_solution(l - 1)).abs() < expected + 1e-3);
    }

    #[test]
    fn unconverged_run_reports_false() {
        let mut m = model();
        m.max_level = 2;
        let r = run_mlmc(&m, 0.01, 1, &Executor::sequential()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.finest_level, 2);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(run_mlmc(&model(), 0.0, 1, &Executor::sequential()).is_err());
        assert!(run_mc(&model(), -1.0, 1, &Executor::sequential()).is_err());
    }

    struct Flaky;
    impl LevelSampler for Flaky {
        fn cells(&self) -> usize { 1 }
        fn dx0(&self) -> f64 { 1.0 }
        fn gamma(&self) -> usize { 2 }
        fn alpha(&self) -> f64 { 1.0 }
        fn max_level(&self) -> usize { 3 }
        fn n_initial(&self) -> u64 { 10 }
        fn correction(&self, _level: usize, key: SampleKey) -> Result<CorrectionSample> {
            if key.sample_id == 3 {
                return Err(Error::SolverFailure { step: 0, reason: "nan".into() });
            }
            Ok(CorrectionSample { correction: vec![0.0], fine: vec![0.0] })
        }
        fn solution(&self, _level: usize, key: SampleKey) -> Result<Vec<f64>> {
            if key.sample_id == 5 {
                return Err(Error::SolverFailure { step: 0, reason: "nan".into() });
            }
            Ok(vec![0.0])
        }
    }

    #[test]
    fn failed_sample_retries_then_succeeds() {
        let r = run_mlmc(&Flaky, 0.1, 1, &Executor::sequential()).unwrap();
        assert!(r.converged);
        let r = run_mc(&Flaky, 0.1, 1, &Executor::sequential()).unwrap();
        assert!(r.converged);
    }

    struct Broken;
    impl LevelSampler for Broken {
        fn cells(&self) -> usize { 1 }
        fn dx0(&self) -> f64 { 1.0 }
        fn gamma(&self) -> usize { 2 }
        fn alpha(&self) -> f64 { 1.0 }
        fn max_level(&self) -> usize { 3 }
        fn n_initial(&self) -> u64 { 10 }
        fn correction(&self, _level: usize, _key: SampleKey) -> Result<CorrectionSample> {
            Err(Error::SolverFailure { step: 2, reason: "nan".into() })
        }
        fn solution(&self, _level: usize, _key: SampleKey) -> Result<Vec<f64>> {
            Err(Error::SolverFailure { step: 2, reason: "nan".into() })
        }
    }

    #[test]
    fn persistent_failure_aborts() {
        let e = run_mlmc(&Broken, 0.1, 1, &Executor::sequential()).unwrap_err();
        assert!(matches!(e, Error::Sample { level: 0, .. }));
    }
}
