//! `unitarity-kit`: classify maps by the entanglement and entropy
//! properties they preserve.

mod commands;
mod exit;
mod mapfile;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use unitarity_core::BipartiteShape;

use commands::{ClassifyOptions, GenKind, MeasureChoice};
use exit::{CliError, ExitCode};
use mapfile::MapFile;

const EXIT_CODES: &str = "\
Exit codes:
  0  success (map preserves the property)
  1  parse error or bad argument
  2  dimension mismatch
  3  map does not preserve the property (a witness is printed)
  4  internal or numerical failure";

#[derive(Parser, Debug)]
#[command(name = "unitarity-kit", version, about, after_help = EXIT_CODES)]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a bipartite map preserves the set of entangled states.
    #[command(after_help = EXIT_CODES)]
    Classify {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Overlap threshold for the parallelism tests (defaults to --tol).
        #[arg(long)]
        parallel_tol: Option<f64>,
        #[arg(long, default_value_t = 16)]
        spot_checks: usize,
        #[arg(long, env = "UNITARITY_KIT_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Decide whether a superoperator preserves the entropy of every state.
    #[command(after_help = EXIT_CODES)]
    VerifyEntropy {
        path: PathBuf,
        /// Number of random pure inputs (default 2d + 2).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, env = "UNITARITY_KIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Schmidt decomposition of a state file.
    #[command(after_help = EXIT_CODES)]
    Schmidt {
        path: PathBuf,
        /// Override the cut stored in the file.
        #[arg(long, num_args = 2, value_names = ["N", "M"])]
        shape: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Entanglement measure of a state file.
    #[command(after_help = EXIT_CODES)]
    Measure {
        path: PathBuf,
        #[arg(long, num_args = 2, value_names = ["N", "M"])]
        shape: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = MeasureArg::E)]
        measure: MeasureArg,
    },
    /// Write a test map or state as JSON.
    #[command(after_help = format!("Kinds: {}\n\n{EXIT_CODES}", commands::GEN_KINDS))]
    Gen {
        kind: String,
        params: Vec<String>,
        #[arg(long, env = "UNITARITY_KIT_SEED", default_value_t = 0)]
        seed: u64,
        /// Condition-number cap for random local factors.
        #[arg(long, default_value_t = 10.0)]
        cond: f64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in acceptance checks and file round-trips.
    #[command(after_help = EXIT_CODES)]
    Selfcheck {
        #[arg(long, env = "UNITARITY_KIT_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    #[value(name = "E")]
    E,
    #[value(name = "E1")]
    E1,
    #[value(name = "E2")]
    E2,
}

fn shape_arg(shape: Option<Vec<usize>>) -> Result<Option<BipartiteShape>, CliError> {
    match shape.as_deref() {
        None => Ok(None),
        Some([n, m]) => Ok(Some(BipartiteShape::new(*n, *m)?)),
        Some(other) => Err(CliError::parse(format!("--shape takes two values, got {}", other.len()))),
    }
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::parse(format!("{name} must be positive, got {x}")))
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let outcome = match cli.command {
        Command::Classify { path, tol, parallel_tol, spot_checks, seed } => {
            let tol = positive("--tol", tol)?;
            let parallel_tol = positive("--parallel-tol", parallel_tol.unwrap_or(tol))?;
            let map = MapFile::load(&path)?.to_bipartite_map()?;
            commands::run_classify(&map, ClassifyOptions { tol, parallel_tol, spot_checks, seed })?
        }
        Command::VerifyEntropy { path, samples, seed, tol } => {
            let s = MapFile::load(&path)?.to_superoperator()?;
            commands::run_verify_entropy(&s, samples, seed, positive("--tol", tol)?)?
        }
        Command::Schmidt { path, shape, tol } => {
            let (v, shape) = MapFile::load(&path)?.to_state(shape_arg(shape)?)?;
            commands::run_schmidt(&v, shape, positive("--tol", tol)?, 0)?
        }
        Command::Measure { path, shape, measure } => {
            let (v, shape) = MapFile::load(&path)?.to_state(shape_arg(shape)?)?;
            let choice = match measure {
                MeasureArg::E => MeasureChoice::E,
                MeasureArg::E1 => MeasureChoice::E1,
                MeasureArg::E2 => MeasureChoice::E2,
            };
            commands::run_measure(&v, shape, choice, 0)?
        }
        Command::Gen { kind, params, seed, cond, out } => {
            let file = commands::generate(GenKind::parse(&kind, &params)?, seed, positive("--cond", cond)?)?;
            let json = file.to_json();
            match out {
                Some(path) => std::fs::write(&path, json + "\n")
                    .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?,
                None => println!("{json}"),
            }
            return Ok(ExitCode::Ok);
        }
        Command::Selfcheck { seed } => commands::run_selfcheck(seed)?,
    };
    let rendered = outcome.render(cli.json);
    print!("{rendered}");
    if cli.json {
        println!();
    }
    Ok(outcome.code)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Parse } else { ExitCode::Ok };
            let _ = e.print();
            std::process::exit(code.code());
        }
    };
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.code
    });
    std::process::exit(code.code());
}
