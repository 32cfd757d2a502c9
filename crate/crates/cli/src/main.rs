use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ness_core::OrderingKind;
use ness_dmrg::config::{ConfigError, ExperimentConfig};
use ness_dmrg::run_experiment;

#[derive(Parser)]
#[command(name = "ness-dmrg", about = "Steady states of boundary-driven spin chains", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed recorded with the outputs, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit successfully even when a run did not converge.
        #[arg(long)]
        allow_unconverged: bool,
        /// Superspace ordering, overriding the config.
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<OrderingKind>,
    },
}

fn parse_scheme(s: &str) -> Result<OrderingKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "rln" => Ok(OrderingKind::Rln),
        "rnln" => Ok(OrderingKind::Rnln),
        other => Err(format!("unknown scheme `{other}`, expected rln or rnln")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            allow_unconverged,
            scheme,
        } => {
            let mut config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e @ (ConfigError::Parse { .. } | ConfigError::Invalid(_) | ConfigError::Io { .. })) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(3);
                }
            };
            if let Some(out) = out {
                config.output_dir = out;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(scheme) = scheme {
                config.scheme = scheme;
            }
            if let Err(e) = config.validate() {
                eprintln!("config error: {e}");
                return ExitCode::from(3);
            }

            match run_experiment(&config) {
                Ok(report) => {
                    for run in &report.runs {
                        eprintln!(
                            "{}: energy {:.3e} after {} sweeps ({}), mean current {:.6e}",
                            run.label,
                            run.result.final_energy(),
                            run.result.sweeps(),
                            run.result.stop_reason,
                            run.result.mean_current(),
                        );
                    }
                    if report.all_converged || allow_unconverged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("at least one run did not converge");
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
