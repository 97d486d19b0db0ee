//! `sparse-gev` command line: simulate panels, fit and compare dependency
//! models, and run the synthetic benchmark.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparse_gev::{Error, ErrorClass};

use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "sparse-gev", version, about = "Sparse dependency graphs for extreme-value time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a panel from a random sparse model.
    Simulate {
        /// Output directory for panel.csv, truth.json and model.json.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit one method to a panel and write its graph.
    Fit {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// One-step predictions for every step after the first L, plus the next one.
    Predict {
        #[arg(long, short)]
        input: PathBuf,
        /// Use this fitted Sparse-GEV model instead of fitting.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output CSV.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score the configured methods on one panel.
    Evaluate {
        #[arg(long, short)]
        input: PathBuf,
        /// Edge list of the true graph; without it only RMSE is reported.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Regenerate the synthetic suite from the seed and score every method.
    Benchmark {
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> sparse_gev::Result<()> {
    let cfg = cli.overrides.resolve()?;
    match cli.command {
        Command::Simulate { out } => {
            for f in commands::simulate(&cfg, &out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Fit { input, out } => {
            let (files, roughness) = commands::fit(&cfg, &input, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            if let Some(r) = roughness {
                println!("roughness ratio {r:.4} (posterior mean path vs observations)");
            }
        }
        Command::Predict { input, model, out } => {
            let f = commands::predict(&cfg, &input, model.as_deref(), &out)?;
            println!("wrote {}", f.display());
        }
        Command::Evaluate { input, truth, out } => {
            let (files, table) = commands::evaluate(&cfg, &input, truth.as_deref(), &out)?;
            print!("{table}");
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Benchmark { out } => {
            let (files, table) = commands::benchmark(&cfg, &out)?;
            print!("{table}");
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.tag());
            ExitCode::from(exit_code(&e))
        }
    }
}
