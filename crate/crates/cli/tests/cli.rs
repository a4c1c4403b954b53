use mlmc_hyperbolic::analysis::Regime;
use mlmc_hyperbolic::cases::CaseId;
use mlmc_lab::validate::restrict_shifted;
use mlmc_lab::{run_experiment, validate_invariants, write_outputs, ExperimentConfig, MethodChoice};
use std::path::{Path, PathBuf};
use std::process::Command;

fn preset_path(case: CaseId) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{case}.toml"))
}

#[test]
fn preset_files_match_builtin_presets() {
    for case in CaseId::ALL {
        let loaded = ExperimentConfig::load(&preset_path(case), None).unwrap();
        assert_eq!(loaded, ExperimentConfig::preset(case), "{case}");
    }
}

#[test]
fn case_flag_overrides_file() {
    let cfg = ExperimentConfig::from_toml("case = \"4.1\"", Some(CaseId::JinXinFullyRandom)).unwrap();
    assert_eq!(cfg.case_id, CaseId::JinXinFullyRandom);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        "method = \"mc\"",
        "case = \"9.9\"",
        "case = \"4.1\"\ndeltas = [0.01, 0.02]",
        "case = \"4.1\"\ndeltas = []",
        "case = \"4.1\"\ncolour = 3",
        "case = \"4.2\"\n[physics]\nk = 4",
        "case = \"4.1\"\n[physics]\nepsilon = 0.5",
        "case = \"7.1\"\n[physics]\ngravity = 9.81",
        "case = \"7.1\"\n[physics]\nenforce_subcharacteristic = true",
        "case = \"4.1\"\n[hierarchy]\ngamma = 1",
        "case = \"4.1\"\n[hierarchy]\ndx0 = 0.3",
        "case = \"4.1\"\n[profile]\ntop_level = 9",
    ];
    for text in bad {
        assert!(ExperimentConfig::from_toml(text, None).is_err(), "{text}");
    }
}

fn small(case: &str, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!("case = \"{case}\"\n{extra}"), None).unwrap()
}

#[test]
fn frozen_seeds_write_both_method_blocks() {
    let cfg = small(
        "4.1",
        "deltas = [0.05]\nmethod = \"both\"\n[physics]\nfrozen_seed = 0.5\n[profile]\ntop_level = 2\nsamples = 20",
    );
    let run = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&cfg, &run, dir.path()).unwrap();
    let cost = std::fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    let lines: Vec<&str> = cost.lines().collect();
    assert_eq!(lines[0], "case_id,method,delta,total_cost,finest_level");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4.1,mlmc,0.05,"));
    assert!(lines[2].starts_with("4.1,mc,0.05,"));
    let variance = std::fs::read_to_string(dir.path().join("variance.csv")).unwrap();
    assert!(variance.starts_with("case_id,level,var_solution,var_correction,n_samples\n"));
    assert_eq!(variance.lines().count(), 4);
    for r in &run.reports {
        assert!(r.per_level.iter().all(|l| l.n_samples == cfg.case.n_initial));
    }
}

fn outputs(cfg: &ExperimentConfig) -> (String, String, String) {
    let dir = tempfile::tempdir().unwrap();
    write_outputs(cfg, &run_experiment(cfg).unwrap(), dir.path()).unwrap();
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    (read("cost.csv"), read("variance.csv"), read("rates.json"))
}

#[test]
fn outputs_are_byte_identical_across_workers() {
    let base = "deltas = [0.02, 0.01]\n[profile]\ntop_level = 3\nsamples = 100";
    let one = outputs(&small("4.2", &format!("workers = 1\n{base}")));
    let again = outputs(&small("4.2", &format!("workers = 1\n{base}")));
    let three = outputs(&small("4.2", &format!("workers = 3\n{base}")));
    assert_eq!(one, again);
    assert_eq!(one, three);
}

#[test]
fn advection_preset_fits_regime_one() {
    let mut cfg = ExperimentConfig::preset(CaseId::AdvectionFinite);
    cfg.method = MethodChoice::Mlmc;
    cfg.deltas = vec![0.02, 0.01, 0.005];
    let run = run_experiment(&cfg).unwrap();
    assert_eq!(run.rates.regime, Regime::I);
    let beta = run.rates.beta.as_ref().unwrap().rate;
    assert!((1.6..=2.4).contains(&beta), "beta {beta}");
    let predicted = run.rates.mlmc.predicted.unwrap();
    assert!((predicted.exponent - 2.0).abs() < 0.1, "{predicted}");
    assert!(run.rates.mlmc.fitted_exponent.is_some());
    assert!(run.rates.mc.fitted_exponent.is_none());
}

#[test]
fn shifted_restriction_wraps() {
    let v = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(restrict_shifted(&v, 2, 0), vec![0.0, 2.0, 4.0]);
    assert_eq!(restrict_shifted(&v, 2, 1), vec![1.0, 3.0, 5.0]);
    assert_eq!(restrict_shifted(&v, 3, 4), vec![4.0, 1.0]);
}

#[test]
fn default_validation_passes_and_off_by_one_restriction_fails() {
    let mut cfg = small("4.2", "[validate]\nks_samples = 20000\nsamples = 1000");
    let report = validate_invariants(&cfg).unwrap();
    assert!(report.passed, "{report:#?}");
    cfg.validate.restriction_offset = 1;
    let report = validate_invariants(&cfg).unwrap();
    assert!(!report.passed);
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    assert_eq!(failed, ["telescoping_coarse_mean_sigmas"]);
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_mlmc-lab");
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "case = \"4.1\"\ndeltas = [0.01, 0.02]\n");
    let out = Command::new(exe).args(["run", "--config"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly decreasing"));

    let cfg = write_config(
        dir.path(),
        "case = \"4.2\"\n[validate]\nks_samples = 5000\nsamples = 500\nrestriction_offset = 1\n",
    );
    let out = Command::new(exe).args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);

    let cfg = write_config(
        dir.path(),
        "case = \"4.1\"\ndeltas = [0.05]\n[profile]\ntop_level = 2\nsamples = 20\n",
    );
    let run_dir = dir.path().join("run");
    let out = Command::new(exe)
        .args(["run", "--method", "mlmc", "--workers", "1", "--seed", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("rates.json")).unwrap()).unwrap();
    assert_eq!(rates["case_id"], "4.1");
}
