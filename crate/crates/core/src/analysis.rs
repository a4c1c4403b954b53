//! Rate fits, asymptotic cost predictions and regime classification.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Least-squares fit of a geometric rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Decay order: `values ~ dt^rate`.
    pub rate: f64,
    /// Fitted natural log of the level-0 value.
    pub intercept: f64,
    /// Largest absolute residual in natural log.
    pub residual: f64,
    pub levels_used: usize,
}

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept, max |residual|)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Argument("fit inputs differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("line fit needs 2 points, have {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, residual))
}

/// Decay order in `dt` of a per-level sequence; level `l` has `dt = dt0 gamma^-l`.
pub fn fit_rate(values_per_level: &[f64], gamma: usize) -> Result<RateFit> {
    if values_per_level.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs 3 levels, have {}",
            values_per_level.len()
        )));
    }
    if gamma < 2 {
        return Err(Error::Argument(format!("refinement ratio must be >= 2, got {gamma}")));
    }
    if let Some(v) = values_per_level.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument(format!("rate fit needs positive values, got {v}")));
    }
    let x: Vec<f64> = (0..values_per_level.len()).map(|l| l as f64).collect();
    let y: Vec<f64> = values_per_level.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&x, &y)?;
    let rate = -slope / (gamma as f64).ln();
    Ok(RateFit {
        rate: if rate == 0.0 { 0.0 } else { rate },
        intercept,
        residual,
        levels_used: values_per_level.len(),
    })
}

/// Slope of `log cost` against `log delta`.
pub fn fit_cost_slope(deltas: &[f64], costs: &[f64]) -> Result<f64> {
    if deltas.len() < 2 {
        return Err(Error::InsufficientData("cost slope needs 2 points".into()));
    }
    if deltas.iter().chain(costs).any(|v| !(*v > 0.0)) {
        return Err(Error::Argument("cost slope needs positive deltas and costs".into()));
    }
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = costs.iter().map(|c| c.ln()).collect();
    Ok(linear_fit(&x, &y)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    BetaGtGamma,
    BetaEqGamma,
    BetaLtGamma,
}

/// Predicted cost `delta^-exponent (log 1/delta)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPrediction {
    pub regime_branch: Branch,
    pub exponent: f64,
    pub log_power: u32,
}

impl std::fmt::Display for CostPrediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "delta^-{}", self.exponent)?;
        match self.log_power {
            0 => Ok(()),
            1 => write!(f, " log(1/delta)"),
            p => write!(f, " log(1/delta)^{p}"),
        }
    }
}

fn check_orders(alpha: f64, variance_order: f64, gamma_exp: f64) -> Result<()> {
    if !(alpha > 0.0) || !(gamma_exp > 0.0) {
        return Err(Error::Argument(format!(
            "need alpha > 0 and gamma > 0, got alpha={alpha}, gamma={gamma_exp}"
        )));
    }
    if 2.0 * alpha < gamma_exp {
        return Err(Error::Argument(format!(
            "predictions need 2 alpha >= gamma, got alpha={alpha}, gamma={gamma_exp}"
        )));
    }
    if !(variance_order >= 0.0) {
        return Err(Error::Argument(format!("variance order must be >= 0, got {variance_order}")));
    }
    Ok(())
}

fn predict(alpha: f64, order: f64, gamma_exp: f64, log_at_equal: u32) -> CostPrediction {
    if order > gamma_exp {
        CostPrediction { regime_branch: Branch::BetaGtGamma, exponent: 2.0, log_power: 0 }
    } else if order == gamma_exp {
        CostPrediction { regime_branch: Branch::BetaEqGamma, exponent: 2.0, log_power: log_at_equal }
    } else {
        CostPrediction {
            regime_branch: Branch::BetaLtGamma,
            exponent: 2.0 + (gamma_exp - order) / alpha,
            log_power: 0,
        }
    }
}

/// MLMC cost order from weak order, correction-variance order and cost order.
/// A zero variance order is taken as the limit from above.
pub fn predict_mlmc_cost(alpha: f64, beta: f64, gamma_exp: f64) -> Result<CostPrediction> {
    check_orders(alpha, beta, gamma_exp)?;
    Ok(predict(alpha, beta, gamma_exp, 2))
}

/// Single-level MC cost order. A zero variance order is taken as the limit from above.
pub fn predict_mc_cost(alpha: f64, beta0: f64, gamma_exp: f64) -> Result<CostPrediction> {
    check_orders(alpha, beta0, gamma_exp)?;
    Ok(predict(alpha, beta0, gamma_exp, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    I,
    II,
    III,
    Indeterminate,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
            Regime::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const REGIME_TOL: f64 = 0.25;

/// Classifies a pair of fitted solution and correction variance orders.
pub fn classify_regime(beta0: f64, beta: f64, tol: f64) -> Regime {
    if beta.max(beta0) <= tol {
        Regime::III
    } else if (beta - beta0).abs() <= tol && beta0 > tol {
        Regime::II
    } else if beta - beta0 > tol && beta0 <= tol {
        Regime::I
    } else {
        Regime::Indeterminate
    }
}

/// One-sample Kolmogorov-Smirnov test against `U(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic p-value with the Stephens small-sample correction.
    pub p_value: f64,
    pub n: usize,
}

pub fn ks_uniform(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("KS test needs samples".into()));
    }
    if let Some(x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Argument(format!("KS sample {x} outside [0, 1]")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    Ok(KsResult { statistic, p_value: kolmogorov_tail(lambda), n: xs.len() })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
