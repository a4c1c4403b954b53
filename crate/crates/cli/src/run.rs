//! `run`: delta sweeps, the level variance table and fitted rates.

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use mlmc_hyperbolic::analysis::{
    classify_regime, fit_cost_slope, fit_rate, predict_mc_cost, predict_mlmc_cost, CostPrediction,
    RateFit, Regime, REGIME_TOL,
};
use mlmc_hyperbolic::drivers::{
    run_mc, run_mlmc, variance_profile, CaseSampler, EstimatorReport, Method, VarianceRow,
    COST_DIMS,
};
use mlmc_hyperbolic::exec::{ExecPolicy, Executor};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct CostRow {
    pub case_id: String,
    pub method: String,
    pub delta: f64,
    pub total_cost: f64,
    pub finest_level: usize,
}

#[derive(Debug, Serialize)]
pub struct VarianceCsvRow {
    pub case_id: String,
    pub level: usize,
    pub var_solution: f64,
    pub var_correction: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRates {
    pub predicted: Option<CostPrediction>,
    pub predicted_text: Option<String>,
    /// Minus the fitted log-log slope of cost against delta.
    pub fitted_exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rates {
    pub case_id: String,
    pub alpha: Option<RateFit>,
    pub beta0: Option<RateFit>,
    pub beta: Option<RateFit>,
    pub regime: Regime,
    pub gamma_exponent: f64,
    pub mc: MethodRates,
    pub mlmc: MethodRates,
    pub delta_floor_note: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub reports: Vec<EstimatorReport>,
    pub profile: Vec<VarianceRow>,
    pub rates: Rates,
}

pub fn executor(workers: usize) -> Executor {
    Executor::new(if workers == 1 {
        ExecPolicy::Sequential
    } else {
        ExecPolicy::Parallel { workers }
    })
}

/// Runs the sweep and the variance table and computes the fitted rates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sampler = CaseSampler::new(cfg.case.clone())?;
    let exec = executor(cfg.workers);
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for (method, on) in [(Method::Mlmc, cfg.method.runs_mlmc()), (Method::Mc, cfg.method.runs_mc())] {
        if !on {
            continue;
        }
        for &delta in &cfg.deltas {
            let r = match method {
                Method::Mlmc => run_mlmc(&sampler, delta, cfg.master_seed, &exec),
                Method::Mc => run_mc(&sampler, delta, cfg.master_seed, &exec),
            }
            .with_context(|| format!("{} run at delta {delta}", method.as_str()))?;
            if !r.converged {
                warnings.push(format!(
                    "{} at delta {delta} reached max_level {} without meeting the stopping rule",
                    method.as_str(),
                    cfg.case.max_level
                ));
            }
            reports.push(r);
        }
    }
    let profile = variance_profile(
        &sampler,
        0..=cfg.profile.top_level,
        cfg.profile.samples,
        cfg.master_seed,
        &exec,
    )?;
    let rates = fit_rates(cfg, &profile, &reports, warnings);
    Ok(RunOutput { reports, profile, rates })
}

fn fit_or_warn(values: &[f64], gamma: usize, what: &str, warnings: &mut Vec<String>) -> Option<RateFit> {
    match fit_rate(values, gamma) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("{what} fit skipped: {e}"));
            None
        }
    }
}

pub fn fit_rates(
    cfg: &ExperimentConfig,
    profile: &[VarianceRow],
    reports: &[EstimatorReport],
    mut warnings: Vec<String>,
) -> Rates {
    let gamma = cfg.case.gamma;
    let from = cfg.profile.fit_from;
    let window: Vec<&VarianceRow> = profile.iter().filter(|r| r.level >= from).collect();
    let corrections: Vec<&VarianceRow> = profile.iter().filter(|r| r.level >= from.max(1)).collect();
    let pick = |rows: &[&VarianceRow], f: fn(&VarianceRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    let beta0 = fit_or_warn(&pick(&window, |r| r.var_solution), gamma, "beta0", &mut warnings);
    let beta = fit_or_warn(&pick(&corrections, |r| r.var_correction), gamma, "beta", &mut warnings);
    let alpha = fit_or_warn(&pick(&corrections, |r| r.mean_correction_norm), gamma, "alpha", &mut warnings);
    let regime = match (&beta0, &beta) {
        (Some(b0), Some(b)) => classify_regime(b0.rate, b.rate, REGIME_TOL),
        _ => Regime::Indeterminate,
    };
    let gamma_exponent = COST_DIMS as f64;
    let method_rates = |method: Method, order: Option<f64>| {
        let predicted = order.and_then(|o| {
            let o = o.max(0.0);
            match method {
                Method::Mlmc => predict_mlmc_cost(cfg.case.alpha, o, gamma_exponent),
                Method::Mc => predict_mc_cost(cfg.case.alpha, o, gamma_exponent),
            }
            .ok()
        });
        let (deltas, costs): (Vec<f64>, Vec<f64>) = reports
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.delta, r.total_cost))
            .unzip();
        let fitted_exponent = fit_cost_slope(&deltas, &costs).ok().map(|s| -s);
        MethodRates {
            predicted_text: predicted.map(|p| p.to_string()),
            predicted,
            fitted_exponent,
        }
    };
    Rates {
        case_id: cfg.case_id.to_string(),
        mc: method_rates(Method::Mc, beta0.as_ref().map(|f| f.rate)),
        mlmc: method_rates(Method::Mlmc, beta.as_ref().map(|f| f.rate)),
        alpha,
        beta0,
        beta,
        regime,
        gamma_exponent,
        delta_floor_note: cfg.delta_floor_note.clone(),
        warnings,
    }
}

/// Writes `cost.csv`, `variance.csv` and `rates.json` into `out`.
pub fn write_outputs(cfg: &ExperimentConfig, run: &RunOutput, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let case_id = cfg.case_id.to_string();
    let mut w = csv::Writer::from_path(out.join("cost.csv"))?;
    for r in &run.reports {
        w.serialize(CostRow {
            case_id: case_id.clone(),
            method: r.method.as_str().to_string(),
            delta: r.delta,
            total_cost: r.total_cost,
            finest_level: r.finest_level,
        })?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join("variance.csv"))?;
    for r in &run.profile {
        w.serialize(VarianceCsvRow {
            case_id: case_id.clone(),
            level: r.level,
            var_solution: r.var_solution,
            var_correction: r.var_correction,
            n_samples: r.n_samples,
        })?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(&run.rates)?;
    std::fs::write(out.join("rates.json"), json + "\n")?;
    Ok(())
}
