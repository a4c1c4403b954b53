use anyhow::Result;
use clap::{Parser, Subcommand};
use mlmc_hyperbolic::cases::CaseId;
use mlmc_lab::{run_experiment, validate_invariants, write_outputs, ExperimentConfig, MethodChoice};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mlmc-lab", version, about = "Adaptive MLMC and MC experiments for hyperbolic test problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep delta, tabulate level variances and fit rates.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Case id (4.1 .. 7.2); overrides the config file.
        #[arg(long)]
        case: Option<CaseId>,
        #[arg(long, value_enum)]
        method: Option<MethodChoice>,
        /// Worker threads; 0 uses every core, 1 runs sequentially.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the invariant checks and print a JSON report.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, case, method, workers, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config, case)?;
            if let Some(m) = method {
                cfg.method = m;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let run = run_experiment(&cfg)?;
            write_outputs(&cfg, &run, &out)?;
            for w in &run.rates.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "case {}: regime {}, wrote {}",
                cfg.case_id,
                run.rates.regime,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, workers } => {
            let mut cfg = ExperimentConfig::load(&config, None)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let report = validate_invariants(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
