use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use calspec::random::GeneratorKind;
use calspec_cli::{generate, load, run_file, to_json, CliError, RunOptions, OUT_DIR_ENV};
use clap::{Parser, Subcommand};

/// Spectral analysis of operators on calibrated coordinate spaces.
#[derive(Parser, Debug)]
#[command(name = "calspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every task in a scenario and write reports.
    Run {
        scenario: PathBuf,

        /// Output directory.
        #[arg(long, env = OUT_DIR_ENV, default_value = "calspec-out")]
        out: PathBuf,

        /// Seed for randomized property checks (overrides the scenario's).
        #[arg(long)]
        seed: Option<u64>,

        #[arg(long)]
        tol_radius: Option<f64>,

        #[arg(long)]
        tol_neumann: Option<f64>,

        #[arg(long)]
        max_terms: Option<usize>,

        /// Treat entries with modulus <= τ as structural zeros.
        #[arg(long, value_name = "τ")]
        relax_zero: Option<f64>,
    },
    /// Write a random scenario.
    Generate {
        /// triangular-nested, diagonal, shift or random-invariant.
        #[arg(long)]
        kind: String,

        #[arg(long)]
        n: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            tol_radius,
            tol_neumann,
            max_terms,
            relax_zero,
        } => {
            let opts = RunOptions {
                seed,
                tol_radius,
                tol_neumann,
                max_terms,
                relax_zero,
            };
            let summary = run_file(&scenario, &out, &opts)?;
            for t in &summary.tasks {
                let status = if t.passed { "pass" } else { "FAIL" };
                match &t.error {
                    Some(e) => println!("{status} {} ({}): {e}", t.id, t.task),
                    None if t.failed_checks.is_empty() => println!("{status} {} ({})", t.id, t.task),
                    None => println!("{status} {} ({}): {}", t.id, t.task, t.failed_checks.join(", ")),
                }
            }
            Ok(summary.exit_code as u8)
        }
        Command::Generate { kind, n, seed, out } => {
            let kind: GeneratorKind = kind.parse()?;
            let text = to_json(&generate(kind, n, seed)?);
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?,
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?,
            }
            Ok(0)
        }
        Command::Validate { scenario } => {
            let r = load(&scenario)?;
            println!(
                "ok: dim {}, {} calibrations, {} operators, {} tasks",
                r.scenario.space.dim,
                r.calibrations.len(),
                r.operators.len(),
                r.scenario.tasks.len()
            );
            Ok(0)
        }
    }
}
