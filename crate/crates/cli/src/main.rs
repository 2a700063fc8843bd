use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use credal_cli::{execute, scenario, CliError, Kind, Overrides};

const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

/// Run credal-set update scenarios and write report.json, trace.csv and
/// metadata.json.
#[derive(Debug, Parser)]
#[command(name = "credal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate an update rule from a start set
    Iterate(RunArgs),
    /// Measure point or set contraction of Bayes updates
    Contract(RunArgs),
    /// Estimate the modulus of a rule on a grid of input distances
    Psi(RunArgs),
    /// Run the discontinuous shift and its continuity witnesses
    Counterexample(RunArgs),
    /// Compare a composed orbit with its envelope orbits
    Sandwich(RunArgs),
    /// Run the conjugate Gaussian illustration
    Gaussian(RunArgs),
    /// Check that orbits from several starts share a limit
    Uniqueness(RunArgs),
    /// Parse and validate a scenario without running it
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the JSON schema of scenario files
    Schema,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

fn run(kind: Kind, args: RunArgs) -> Result<ExitCode, CliError> {
    let overrides = Overrides { seed: args.seed, max_iter: args.max_iter, tol: args.tol };
    let exec = execute(Some(kind), &args.scenario, &args.out, &overrides)?;
    for flag in &exec.ignored_flags {
        eprintln!("note: {flag} does not apply to `{}` scenarios and was ignored", kind.as_str());
    }
    for (name, ok) in &exec.outcome.checks {
        eprintln!("{} {name}", if *ok { "ok  " } else { "FAIL" });
    }
    println!("{}: {}", kind.as_str(), if exec.outcome.passed { "passed" } else { "not passed" });
    Ok(if exec.outcome.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Iterate(a) => run(Kind::Iterate, a),
        Command::Contract(a) => run(Kind::Contract, a),
        Command::Psi(a) => run(Kind::Psi, a),
        Command::Counterexample(a) => run(Kind::Counterexample, a),
        Command::Sandwich(a) => run(Kind::Sandwich, a),
        Command::Gaussian(a) => run(Kind::Gaussian, a),
        Command::Uniqueness(a) => run(Kind::Uniqueness, a),
        Command::Validate { scenario } => scenario::load_scenario(&scenario).map(|s| {
            println!("valid `{}` scenario", s.scenario.kind().as_str());
            ExitCode::SUCCESS
        }),
        Command::Schema => {
            print!("{SCHEMA}");
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_violation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
