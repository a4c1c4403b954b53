//! Streaming field statistics, sample allocation and the a-posteriori
//! stopping rules shared by the MLMC and MC drivers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-cell running mean and sum of squared deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub n: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
    pub cost_total: f64,
}

impl FieldStats {
    pub fn new(cells: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; cells],
            m2: vec![0.0; cells],
            cost_total: 0.0,
        }
    }

    pub fn cells(&self) -> usize {
        self.mean.len()
    }

    /// Welford update with one sample field.
    pub fn accumulate(&mut self, field: &[f64], cost: f64) -> Result<()> {
        if field.len() != self.mean.len() {
            return Err(Error::Argument(format!(
                "sample has {} cells, statistics have {}",
                field.len(),
                self.mean.len()
            )));
        }
        self.n += 1;
        let inv_n = 1.0 / self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(field) {
            let d = x - *m;
            *m += d * inv_n;
            *s += d * (x - *m);
        }
        self.cost_total += cost;
        Ok(())
    }

    /// Pairwise combination of two disjoint sample streams.
    pub fn merge(&mut self, other: &FieldStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.n += other.n;
        self.cost_total += other.cost_total;
    }

    /// Unbiased per-cell variance.
    pub fn variance(&self) -> Result<Vec<f64>> {
        if self.n < 2 {
            return Err(Error::InsufficientData(format!(
                "variance needs at least 2 samples, have {}",
                self.n
            )));
        }
        let d = (self.n - 1) as f64;
        Ok(self.m2.iter().map(|s| (s / d).max(0.0)).collect())
    }

    /// `sum_i var_i dx`.
    pub fn integrated_variance(&self, dx: f64) -> Result<f64> {
        Ok(self.variance()?.iter().sum::<f64>() * dx)
    }
}

/// Discrete L2 norm `sqrt(sum_i f_i^2 dx)`.
pub fn l2_norm(field: &[f64], dx: f64) -> f64 {
    (field.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

/// Statistics gathered on one level, all on the level-0 grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level_index: usize,
    pub stats_correction: FieldStats,
    pub stats_solution: FieldStats,
    pub scalar_variance_correction: f64,
    pub scalar_variance_solution: f64,
    pub unit_cost: f64,
}

impl LevelStats {
    pub fn new(level_index: usize, cells: usize, unit_cost: f64) -> Self {
        Self {
            level_index,
            stats_correction: FieldStats::new(cells),
            stats_solution: FieldStats::new(cells),
            scalar_variance_correction: 0.0,
            scalar_variance_solution: 0.0,
            unit_cost,
        }
    }

    pub fn n_samples(&self) -> u64 {
        self.stats_solution.n.max(self.stats_correction.n)
    }

    /// Refreshes the scalar variances from the field statistics.
    pub fn refresh(&mut self, dx0: f64) -> Result<()> {
        if self.stats_correction.n >= 2 {
            self.scalar_variance_correction = self.stats_correction.integrated_variance(dx0)?;
        }
        if self.stats_solution.n >= 2 {
            self.scalar_variance_solution = self.stats_solution.integrated_variance(dx0)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &LevelStats) {
        self.stats_correction.merge(&other.stats_correction);
        self.stats_solution.merge(&other.stats_solution);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub mu: f64,
    pub n_per_level: Vec<u64>,
}

/// Relative slack so that values equal to an integer in exact arithmetic
/// are not pushed to the next integer by round-off.
const CEIL_SLACK: f64 = 1e-12;

#[inline]
fn ceil_count(x: f64) -> u64 {
    ((x * (1.0 - CEIL_SLACK)).ceil() as u64).max(1)
}

/// Sample counts `N_k = ceil(mu sqrt(V_k / C_k))`,
/// `mu = 2 delta^-2 sum_j sqrt(V_j C_j)`. Zero-variance levels get `zero_floor`.
pub fn optimal_allocation(
    inputs: &[(f64, f64)],
    delta: f64,
    zero_floor: u64,
) -> Result<AllocationPlan> {
    if inputs.is_empty() {
        return Err(Error::Argument("allocation needs at least one level".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    if let Some(&(v, c)) = inputs.iter().find(|&&(v, c)| !(c > 0.0) || !(v >= 0.0)) {
        return Err(Error::Argument(format!(
            "allocation needs V >= 0 and C > 0, got V={v}, C={c}"
        )));
    }
    let sum: f64 = inputs.iter().map(|&(v, c)| (v * c).sqrt()).sum();
    let mu = 2.0 * sum / (delta * delta);
    let n_per_level = inputs
        .iter()
        .map(|&(v, c)| {
            if v == 0.0 {
                zero_floor.max(1)
            } else {
                ceil_count(mu * (v / c).sqrt())
            }
        })
        .collect();
    Ok(AllocationPlan { mu, n_per_level })
}

/// Single-level count `N = ceil(2 delta^-2 V)`.
pub fn mc_allocation(variance: f64, delta: f64, zero_floor: u64) -> Result<u64> {
    if !(delta > 0.0) || !(variance >= 0.0) {
        return Err(Error::Argument(format!(
            "need delta > 0 and V >= 0, got delta={delta}, V={variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(zero_floor.max(1));
    }
    Ok(ceil_count(2.0 * variance / (delta * delta)))
}

/// `sum_l V_l / N_l`.
pub fn estimator_variance(variances: &[f64], counts: &[u64]) -> f64 {
    variances
        .iter()
        .zip(counts)
        .map(|(v, &n)| v / n as f64)
        .sum()
}

/// True when the estimator variance is within `delta^2 / 2` (up to the ceiling slack).
pub fn within_budget(variances: &[f64], counts: &[u64], delta: f64) -> bool {
    estimator_variance(variances, counts) <= 0.5 * delta * delta * (1.0 + 1e-9)
}

/// Bias tolerance `(gamma^alpha - 1) delta / sqrt(2)`.
pub fn stopping_threshold(gamma: usize, alpha: f64, delta: f64) -> f64 {
    ((gamma as f64).powf(alpha) - 1.0) * delta / std::f64::consts::SQRT_2
}

/// Multilevel stopping rule on the mean correction of the finest level.
pub fn stopping_mlmc(mean_correction: &[f64], dx0: f64, gamma: usize, alpha: f64, delta: f64) -> bool {
    l2_norm(mean_correction, dx0) <= stopping_threshold(gamma, alpha, delta)
}

/// Single-level stopping rule on the change of consecutive level means.
pub fn stopping_mc(
    mean_l: &[f64],
    mean_lminus1: &[f64],
    dx0: f64,
    gamma: usize,
    alpha: f64,
    delta: f64,
) -> bool {
    let diff: Vec<f64> = mean_l.iter().zip(mean_lminus1).map(|(a, b)| a - b).collect();
    l2_norm(&diff, dx0) < stopping_threshold(gamma, alpha, delta)
}
