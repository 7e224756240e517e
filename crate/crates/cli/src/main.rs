//! `contiflow` — experiment harness for continuum particle dynamics.
//!
//! Exit codes: 0 success, 2 invalid config, 3 Monte Carlo tolerance unmet,
//! 4 acceptance-test failure.

use clap::{Parser, Subcommand};
use contiflow_cli::config::ExperimentConfig;
use contiflow_cli::pipelines::ConstantsFile;
use contiflow_cli::{acceptance, runner};
use contiflow_core::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "contiflow", version, about = "Continuum particle dynamics harness")]
struct Cli {
    /// Worker threads (default: CONTIFLOW_JOBS or all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the hopping dynamics over the configured ε list
    SimulateKawasaki {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Simulate the birth-and-death dynamics
    SimulateGlauber {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// free | interacting
        #[arg(long, default_value = "free")]
        mode: String,
        /// constants file from estimate-constants (interacting mode)
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Draw a Gibbs configuration bank
    SampleGibbs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate C_u, C_v, the addend scaling constants and the intensity
    EstimateConstants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// maximum relative standard error before exit 3
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Run the configured experiment's ε sweep and emit per-ε rows
    ScalingSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Admissibility checks (stability, low activity, integrability, geometry)
    CheckConditions {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact-identity self test of the configuration-space combinatorics
    HarmonicSelftest,
    /// Run the full acceptance suite
    Accept {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn init_threads(jobs: Option<usize>) {
    let n = jobs.or_else(|| {
        std::env::var("CONTIFLOW_JOBS").ok().and_then(|s| s.parse::<usize>().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {path:?}: {e}"))?;
    let text = match seed {
        // CLI seed overrides the config seed line
        Some(s) => {
            let stripped: String = text
                .lines()
                .filter(|l| !l.trim_start().starts_with("seed"))
                .collect::<Vec<_>>()
                .join("\n");
            format!("{stripped}\nseed = {s}\n")
        }
        None => text,
    };
    ExperimentConfig::parse(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.jobs);
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn map_core_err(e: Error) -> (String, u8) {
    let code = match e {
        Error::ToleranceUnmet { .. } => 3,
        _ => 2,
    };
    (e.to_string(), code)
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::SimulateKawasaki { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let (banks, csv) = runner::run_simulate_kawasaki(&cfg).map_err(|e| e.to_string())?;
            let mut outputs = banks;
            outputs.push(("kawasaki_summary.csv".into(), csv.render()));
            runner::write_all(&out, "simulate-kawasaki", cfg.params_hash(), cfg.seed, &outputs)
                .map_err(|e| e.to_string())?;
            println!("wrote {} outputs to {out:?}", outputs.len() + 1);
            Ok(ExitCode::SUCCESS)
        }
        Command::SimulateGlauber { config, seed, out, mode, constants } => {
            let cfg = load_config(&config, seed)?;
            let consts: Option<ConstantsFile> = match constants {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| format!("cannot read constants {p:?}: {e}"))?;
                    Some(serde_json::from_str(&text).map_err(|e| format!("bad constants: {e}"))?)
                }
                None => None,
            };
            let (banks, csv) = runner::run_simulate_glauber(&cfg, &mode, consts.as_ref())
                .map_err(|e| e.to_string())?;
            let mut outputs = banks;
            outputs.push(("glauber_summary.csv".into(), csv.render()));
            runner::write_all(&out, "simulate-glauber", cfg.params_hash(), cfg.seed, &outputs)
                .map_err(|e| e.to_string())?;
            println!("wrote {} outputs to {out:?}", outputs.len() + 1);
            Ok(ExitCode::SUCCESS)
        }
        Command::SampleGibbs { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let bank = runner::run_sample_gibbs(&cfg).map_err(|e| e.to_string())?;
            let outputs = vec![("gibbs.bank".to_string(), runner::render_bank(&bank))];
            runner::write_all(&out, "sample-gibbs", cfg.params_hash(), cfg.seed, &outputs)
                .map_err(|e| e.to_string())?;
            println!("wrote {} configurations to {out:?}/gibbs.bank", bank.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::EstimateConstants { config, seed, out, tolerance } => {
            let cfg = load_config(&config, seed)?;
            match runner::run_estimate_constants(&cfg, tolerance) {
                Ok(constants) => {
                    let json =
                        serde_json::to_string_pretty(&constants).map_err(|e| e.to_string())?;
                    let outputs = vec![("constants.json".to_string(), json)];
                    runner::write_all(
                        &out,
                        "estimate-constants",
                        cfg.params_hash(),
                        cfg.seed,
                        &outputs,
                    )
                    .map_err(|e| e.to_string())?;
                    println!("wrote constants.json to {out:?}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    let (msg, code) = map_core_err(e);
                    eprintln!("error: {msg}");
                    Ok(ExitCode::from(code))
                }
            }
        }
        Command::ScalingSweep { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            match runner::run_experiment(&cfg) {
                Ok(outputs) => {
                    runner::write_all(
                        &out,
                        cfg.experiment.name(),
                        cfg.params_hash(),
                        cfg.seed,
                        &outputs,
                    )
                    .map_err(|e| e.to_string())?;
                    println!("wrote {} outputs to {out:?}", outputs.len() + 1);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    let (msg, code) = map_core_err(e);
                    eprintln!("error: {msg}");
                    Ok(ExitCode::from(code))
                }
            }
        }
        Command::CheckConditions { config } => {
            let cfg = load_config(&config, None)?;
            let report = runner::run_check_conditions(&cfg).map_err(|e| e.to_string())?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Command::HarmonicSelftest => {
            let (table, all) = runner::run_harmonic_selftest().map_err(|e| e.to_string())?;
            print!("{table}");
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::Accept { seed, out } => {
            let suite = acceptance::run_suite(seed, true).map_err(|e| e.to_string())?;
            let mut outputs = suite.csvs.clone();
            outputs.push(("constants.json".to_string(), suite.constants_json.clone()));
            let report = acceptance::report(&suite.results);
            outputs.push(("acceptance_report.txt".to_string(), report.clone()));
            runner::write_all(&out, "accept", 0, seed, &outputs).map_err(|e| e.to_string())?;
            print!("{report}");
            Ok(if suite.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
    }
}
