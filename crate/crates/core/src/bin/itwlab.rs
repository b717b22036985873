use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use itwlab::experiment::{catalog_table, run_experiment, run_quick, ExperimentConfig, OUT_ENV};
use itwlab::Error;

#[derive(Parser)]
#[command(name = "itwlab", version, about = "Ito-Tanaka-Wentzell and fBm numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (TOML).
    Run {
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the field, drift and functional catalog.
    List,
    /// Smoke suite over every experiment kind.
    Verify {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            print!("{}", catalog_table());
            ExitCode::SUCCESS
        }
        Command::Run { config, workers, out } => {
            let mut cfg = match ExperimentConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if out.is_some() {
                cfg.output = out;
            }
            match run_experiment(&cfg) {
                Ok(o) => {
                    println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.kind.name(), o.summary);
                    println!("artifacts in {}", o.output.display());
                    if o.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::Verify { quick, workers } => {
            if !quick {
                eprintln!("only the smoke suite is available here (--quick); the full suite is `cargo test --test acceptance`");
                return ExitCode::from(2);
            }
            let root = std::env::var_os(OUT_ENV)
                .map_or_else(|| PathBuf::from("itwlab-out"), PathBuf::from)
                .join("quick");
            let results = match run_quick(&root, workers) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            let mut ok = true;
            for (name, r) in results {
                match r {
                    Ok(o) => {
                        ok &= o.passed;
                        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
                    }
                    Err(e) => {
                        ok = false;
                        println!("FAIL {name}: {e}");
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
