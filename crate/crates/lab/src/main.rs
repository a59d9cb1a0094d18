use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsobolev_core::verifier::CHECK_NAMES;
use wsobolev_lab::config::{self, ConfigError, DOMAIN_KINDS, EXTRA_CHECKS, FUNCTION_FAMILIES, OPERATOR_KINDS, WEIGHT_FAMILIES};
use wsobolev_lab::report::{self, Format, Verdict};
use wsobolev_lab::runner::{self, RunOptions};
use wsobolev_lab::{study, EXIT_FAIL, EXIT_INVALID, EXIT_PASS, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "wsobolev", version, about = "Numerical verification of weighted Sobolev identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a configuration and write the report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output path; defaults to the config's output.path, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// Record wall time per check (reports are then not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Per-level values and empirical orders of convergence.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        min_level: usize,
        #[arg(long)]
        max_level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// List the check names accepted in a configuration.
    ListChecks,
    /// List the weight, function, operator and domain families.
    ListFamilies,
}

fn invalid(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID as u8)
}

fn install_pool() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::new(WORKERS_ENV, format!("expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new(WORKERS_ENV, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = install_pool() {
        return invalid(e);
    }
    match cli.command {
        Command::Verify { config, out, format, timings } => {
            let exp = match config::load(&config) {
                Ok(e) => e,
                Err(e) => return invalid(e),
            };
            let report = runner::run(&exp, RunOptions { timings });
            let format = format.unwrap_or(exp.format);
            let out = out.or_else(|| exp.out.as_ref().map(PathBuf::from));
            if let Err(e) = report::emit(&report, format, out.as_deref()) {
                return invalid(format!("cannot write report: {e}"));
            }
            eprintln!(
                "verdict: {} ({} passed, {} failed, {} not applicable)",
                if report.verdict == Verdict::Pass { "pass" } else { "fail" },
                report.passed,
                report.failed,
                report.not_applicable
            );
            ExitCode::from(if report.verdict == Verdict::Pass { EXIT_PASS } else { EXIT_FAIL } as u8)
        }
        Command::Converge { config, min_level, max_level, out, format } => {
            let result = config::load(&config).and_then(|exp| study::convergence_study(&exp, min_level, max_level));
            match result {
                Ok(s) => match report::write_text(&study::render(&s, format), out.as_deref()) {
                    Ok(()) => ExitCode::from(EXIT_PASS as u8),
                    Err(e) => invalid(format!("cannot write study: {e}")),
                },
                Err(e) => invalid(e),
            }
        }
        Command::ListChecks => {
            for name in CHECK_NAMES.iter().chain(EXTRA_CHECKS.iter()) {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::ListFamilies => {
            println!("weight: {}", WEIGHT_FAMILIES.join(", "));
            println!("function: {}", FUNCTION_FAMILIES.join(", "));
            println!("operator: {}", OPERATOR_KINDS.join(", "));
            println!("domain: {}", DOMAIN_KINDS.join(", "));
            ExitCode::SUCCESS
        }
    }
}
