use std::path::PathBuf;
use std::process::ExitCode;

use arrival_cli::{parse_config, run_scenario, RunOptions};
use arrival_core::acceptance;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "arrival", version, about = "Arrival-time scenarios for a complex absorbing step")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the analyses of a scenario file
    Run {
        /// TOML scenario
        config: PathBuf,
        /// Output directory, overriding `output_dir` in the scenario
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent analyses
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Also check results against independent oracles
        #[arg(long)]
        verify_oracles: bool,
    },
    /// Run the acceptance suite
    Selftest {
        /// Only these criteria (1-11)
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::Run { config, out, threads, verify_oracles } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions { out_dir: out, threads, verify_oracles };
            match run_scenario(&cfg, &opts) {
                Ok(report) => {
                    for a in &report.analyses {
                        let status = if a.pass() { "ok" } else { "FAIL" };
                        println!("{status:>4}  {}", a.kind);
                        if let Some(e) = &a.error {
                            println!("      error: {e}");
                        }
                        for c in a.assertions.iter().filter(|c| !c.pass) {
                            println!("      {} = {:.4e} ({} {:.3e})", c.name, c.measured, c.bound, c.threshold);
                        }
                    }
                    if report.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Selftest { only } => {
            let ids: Vec<usize> = if only.is_empty() { (1..=acceptance::NAMES.len()).collect() } else { only };
            let mut pass = true;
            for id in ids {
                match acceptance::run(id) {
                    Some(r) => {
                        print!("{r}");
                        pass &= r.pass();
                    }
                    None => {
                        eprintln!("no criterion {id}");
                        pass = false;
                    }
                }
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
