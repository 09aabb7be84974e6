//! Command-line driver: single solves, convergence studies, baseline
//! comparisons, and special-function self tests.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 I/O error.

use clap::{Parser, Subcommand};
use fracfem_cli::config::StudyConfig;
use fracfem_cli::study::{self, CliError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fracfem", version, about = "Spectral fractional Laplacian solver driver")]
struct Cli {
    /// Worker threads: 0 = automatic, 1 = deterministic mode (timing
    /// columns zeroed so output is byte-identical across runs).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve on the finest configured level and write the bottom trace.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV destination; defaults to the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the refinement study and write the convergence table.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the extension solve against the dense spectral baseline.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Bessel evaluator against its integral oracle.
    Selftest {
        /// Table destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf) -> Result<StudyConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    StudyConfig::from_json(&text).map_err(CliError::Config)
}

fn write_out(path: &str, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let deterministic = cli.threads == 1;
    match cli.cmd {
        Cmd::Solve { config, out } => {
            let cfg = load_config(&config)?;
            let (summary_json, trace_csv) = study::solve_single(&cfg)?;
            println!("{summary_json}");
            let path = out.map(|p| p.display().to_string()).unwrap_or(cfg.output);
            write_out(&path, &trace_csv)
        }
        Cmd::Converge { config, out } => {
            let cfg = load_config(&config)?;
            let table = study::run_study(&cfg, deterministic)?;
            let path = out.map(|p| p.display().to_string()).unwrap_or_else(|| cfg.output.clone());
            study::emit_csv(&table, &path)
        }
        Cmd::OracleCompare { config, out } => {
            let cfg = load_config(&config)?;
            let body = study::oracle_compare(&cfg)?;
            let path = out.map(|p| p.display().to_string()).unwrap_or(cfg.output);
            write_out(&path, &body)
        }
        Cmd::Selftest { out } => {
            let (body, max_rel) = study::selftest()?;
            match out {
                Some(p) => write_out(&p.display().to_string(), &body)?,
                None => print!("{body}"),
            }
            if max_rel >= 1e-10 {
                return Err(CliError::Solver(format!(
                    "Bessel self test exceeded tolerance: max_rel_err={max_rel:.3e}"
                )));
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
