use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bandits_core::config::ExperimentConfig;
use bandits_core::equilibrium::{analyze, solve_symmetric_mne, solve_symmetric_mne_auto};
use bandits_core::experiment::{run_experiment, run_stability};
use bandits_core::Error;

const OUT_DIR_ENV: &str = "BANDITS_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "bandits-out";

#[derive(Parser)]
#[command(name = "bandits", version, about = "Multi-player bandits with averaged shared rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the pure equilibrium and instance constants as JSON.
    Equilibrium {
        /// Arm means, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        means: Vec<f64>,
        #[arg(long)]
        players: usize,
        /// Also solve the symmetric mixed equilibrium.
        #[arg(long)]
        mne: bool,
        /// 1-based support for the mixed equilibrium (default: found from the
        /// means).
        #[arg(long, value_delimiter = ',', requires = "mne")]
        mne_support: Option<Vec<usize>>,
    },
    /// Run every seed of a config and write CSV and JSON outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Paired-seed deviation report for the config's deviation section.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::AssumptionViolation(_) => 3,
        Error::Io(_) | Error::Csv(_) => 4,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Equilibrium { means, players, mne, mne_support } => {
            println!("{}", equilibrium_report(&means, players, mne, mne_support)?);
        }
        Command::Simulate { config, out, jobs } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let dir = out_dir(out, &cfg);
            let summary = run_experiment(&cfg, &dir, jobs)?;
            eprintln!("wrote {} runs to {}", summary.seeds.len(), dir.display());
        }
        Command::Stability { config, jobs } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = run_stability(&cfg, jobs)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new(DEFAULT_OUT_DIR).to_path_buf())
}

fn equilibrium_report(means: &[f64], players: usize, mne: bool, support: Option<Vec<usize>>) -> Result<String, Error> {
    let a = analyze(means, players)?;
    let symmetric_mne = if mne {
        let m = match support {
            Some(s) => {
                if let Some(&bad) = s.iter().find(|&&k| k == 0 || k > means.len()) {
                    return Err(Error::Config(format!("support arm {bad} outside 1..={}", means.len())));
                }
                let s: Vec<usize> = s.iter().map(|k| k - 1).collect();
                solve_symmetric_mne(means, players, &s)?
            }
            None => solve_symmetric_mne_auto(means, players)?,
        };
        Some(json!({ "p": m.p, "payoff": m.c, "welfare": m.welfare }))
    } else {
        None
    };
    let report = json!({
        "z_star": a.profile.z_star,
        "m_star": a.profile.m_star,
        "support": a.profile.support.iter().map(|k| k + 1).collect::<Vec<_>>(),
        "delta0": a.delta0,
        "poa": a.poa.poa,
        "poa_upper": a.poa.poa_upper,
        "w_pne": a.poa.w_pne,
        "w_max": a.poa.w_max,
        "lb_constant": a.lb_constant,
        "symmetric_mne": symmetric_mne,
    });
    Ok(serde_json::to_string_pretty(&report)?)
}
