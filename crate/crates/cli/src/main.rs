use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sarg04_core::channel::{trusted_keyrate, TrustedMode};
use sarg04_core::config::{load_config, parse_config};
use sarg04_core::experiment::{emit_csv, output_paths, run_scenario, validate_csv};
use sarg04_core::Error;

#[derive(Parser)]
#[command(
    name = "sarg04",
    version,
    about = "SARG04 key-rate bounds for untrusted sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write the result table(s).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `data.seed` (Monte-Carlo mode).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-check the invariants of an emitted CSV.
    Validate { csv: PathBuf },
    /// Trusted-source curves only (Poisson source, GYS channel unless a config is given).
    Baseline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load_config(&config).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let tables = run_scenario(&cfg)?;
            for (table, path) in tables.iter().zip(output_paths(&out, &tables)) {
                emit_csv(table, &path)?;
                eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
            }
        }
        Command::Validate { csv } => {
            let rows = validate_csv(&csv)?;
            println!("{}: {rows} rows ok", csv.display());
        }
        Command::Baseline { config, out } => {
            let cfg = match config {
                Some(path) => load_config(&path),
                None => parse_config(
                    "[sweep]\nstart_km = 0\nstop_km = 150\nstep_km = 5\noptimize_mu = true\n",
                    None,
                ),
            }
            .map_err(|e| Failure::Config(e.to_string()))?;
            let mut text = String::from("distance_km,mu,rate_trusted_1ph,rate_trusted_2ph\n");
            for &d in &cfg.distances_km {
                let channel = cfg.channel.at_distance(d);
                // mu is the argmax of the two-photon curve; both rates are grid maxima.
                let grid = cfg.mu_values();
                let (mut mu_best, mut r1_best, mut r2_best) = (grid[0], 0.0f64, -1.0f64);
                for &mu in &grid {
                    r1_best = r1_best.max(trusted_keyrate(&channel, mu, TrustedMode::OnePhoton)?);
                    let r2 = trusted_keyrate(&channel, mu, TrustedMode::TwoPhoton)?;
                    if r2 > r2_best {
                        (mu_best, r2_best) = (mu, r2);
                    }
                }
                text.push_str(&format!(
                    "{d:.11e},{mu_best:.11e},{r1_best:.11e},{r2_best:.11e}\n"
                ));
            }
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
