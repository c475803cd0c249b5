//! `hist` — command-line surface of the consistent-histories workbench.
//!
//! Exit codes: 0 = ran and passed, 1 = ran but the quantitative verdict
//! failed (inconsistent set, violated condition, discrepancy over tol),
//! 2 = input or usage error.

mod commands;
mod model;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{CliError, Outcome, PathsumMode};
use report::RunReport;
use std::path::PathBuf;
use std::time::Instant;

const DEFAULT_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "hist",
    version,
    about = "Consistent-histories workbench: decoherence functionals, consistency checks, probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Consistency / validation tolerance (default 1e-8, or HIST_DEFAULT_TOL)
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for all randomized validation steps
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample count for randomized validation steps
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write the full-precision JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a history set as consistent and extract probabilities
    Check {
        #[arg(long)]
        model: PathBuf,
        /// Name of the history set in the model file
        #[arg(long)]
        set: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Probability of one history, addressed as SET/NAME or SET/INDEX
    Prob {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        history: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the X operator for a support pair, verify it, and persist it
    BuildX {
        #[arg(long)]
        model: PathBuf,
        /// Take the support (used for both slots) from this history set
        #[arg(long)]
        set: Option<String>,
        /// Named support for the left slot
        #[arg(long)]
        support_a: Option<String>,
        /// Named support for the right slot (defaults to --support-a)
        #[arg(long)]
        support_b: Option<String>,
        /// Where to write the X operator JSON
        #[arg(long, default_value = "x.json")]
        out_x: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the classification conditions on a persisted X operator
    ValidateX {
        /// Path to the X operator JSON
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the discrete path-integral functional and its identities
    Pathsum {
        #[arg(long)]
        model: PathBuf,
        /// Verify additivity and complement identities on random subsets
        #[arg(long)]
        axioms: bool,
        /// Cross-check the path sum against the operator formalism
        #[arg(long)]
        crosscheck: bool,
        /// Subset spec (inline JSON or @file) for the left slot
        #[arg(long)]
        subset_a: Option<String>,
        /// Subset spec (inline JSON or @file) for the right slot
        #[arg(long)]
        subset_b: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn resolve_tol(cli_tol: Option<f64>) -> f64 {
    cli_tol
        .or_else(|| {
            std::env::var("HIST_DEFAULT_TOL")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(DEFAULT_TOL)
}

fn run(cmd: &Command) -> Result<(Outcome, &'static str, PathBuf, f64, u64, Option<usize>), CliError> {
    match cmd {
        Command::Check { model, set, common } => {
            let tol = resolve_tol(common.tol);
            let outcome = commands::cmd_check(model, set, tol)?;
            Ok((outcome, "check", model.clone(), tol, common.seed, None))
        }
        Command::Prob {
            model,
            history,
            common,
        } => {
            let tol = resolve_tol(common.tol);
            let outcome = commands::cmd_prob(model, history, tol)?;
            Ok((outcome, "prob", model.clone(), tol, common.seed, None))
        }
        Command::BuildX {
            model,
            set,
            support_a,
            support_b,
            out_x,
            common,
        } => {
            let tol = resolve_tol(common.tol);
            let samples = common.samples.unwrap_or(200);
            let outcome = commands::cmd_build_x(
                model,
                set.as_deref(),
                support_a.as_deref(),
                support_b.as_deref(),
                out_x,
                samples,
                common.seed,
                tol,
            )?;
            Ok((
                outcome,
                "build-x",
                model.clone(),
                tol,
                common.seed,
                Some(samples),
            ))
        }
        Command::ValidateX { model, common } => {
            let tol = resolve_tol(common.tol);
            let samples = common.samples.unwrap_or(200);
            let outcome = commands::cmd_validate_x(model, samples, common.seed, tol)?;
            Ok((
                outcome,
                "validate-x",
                model.clone(),
                tol,
                common.seed,
                Some(samples),
            ))
        }
        Command::Pathsum {
            model,
            axioms,
            crosscheck,
            subset_a,
            subset_b,
            common,
        } => {
            let tol = resolve_tol(common.tol);
            let samples = common.samples.unwrap_or(12);
            let mode = match (axioms, crosscheck, subset_a, subset_b) {
                (true, false, None, None) => PathsumMode::Axioms,
                (false, true, None, None) => PathsumMode::Crosscheck,
                (false, false, Some(a), Some(b)) => PathsumMode::Evaluate { a, b },
                _ => {
                    return Err(CliError::Usage(
                        "pathsum needs exactly one of: --axioms, --crosscheck, or --subset-a with --subset-b"
                            .into(),
                    ))
                }
            };
            let outcome = commands::cmd_pathsum(model, mode, samples, common.seed)?;
            Ok((
                outcome,
                "pathsum",
                model.clone(),
                tol,
                common.seed,
                Some(samples),
            ))
        }
    }
}

fn common_of(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Check { common, .. }
        | Command::Prob { common, .. }
        | Command::BuildX { common, .. }
        | Command::ValidateX { common, .. }
        | Command::Pathsum { common, .. } => common,
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli.command) {
        Ok((outcome, name, model_path, tol, seed, samples)) => {
            let digest = report::sha256_file(&model_path)
                .unwrap_or_else(|_| "sha256:unavailable".into());
            let report = RunReport {
                command: name.to_string(),
                model: model_path.display().to_string(),
                input_digest: digest,
                tol,
                seed,
                samples,
                duration_ms: started.elapsed().as_secs_f64() * 1e3,
                payload: outcome.payload,
            };
            let common = common_of(&cli.command);
            match common.format {
                Format::Table => println!("{}", outcome.human),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                ),
            }
            if let Some(out) = &common.out {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(out, text) {
                    eprintln!("error: cannot write {}: {e}", out.display());
                    std::process::exit(2);
                }
            }
            std::process::exit(outcome.exit);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
