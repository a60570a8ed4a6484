mod commands;
mod config;
mod error;
mod output;

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use commands::{CcArgs, GeometryCommand, ScenarioArgs};
use config::ScenarioConfig;
use error::{CliError, CliResult, ExitKind};

/// Collinear n-body laboratory.
#[derive(Debug, Parser)]
#[command(name = "collinear", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory and diagnostics CSV files.
    Simulate(ScenarioArgs),
    /// Solve for collinear central configurations.
    Cc(CcArgs),
    /// Integrate a scenario and run the matching checks.
    Verify(ScenarioArgs),
    /// Counting functions and level-set intersections for three bodies.
    Geometry {
        #[command(subcommand)]
        command: GeometryCommand,
    },
    /// Run several scenario files, concurrently with --jobs.
    Batch {
        /// Run `verify` instead of `simulate` for every file.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn verify_exit(outcome: &commands::VerifyOutcome) -> CliResult<()> {
    if outcome.overall {
        Ok(())
    } else {
        Err(CliError { kind: ExitKind::VerificationFailed, message: format!("scenario {} failed verification", outcome.name) })
    }
}

/// Output text plus the result of one batch member.
fn run_one(config: &ScenarioConfig, verify: bool) -> (String, CliResult<()>) {
    if verify {
        match commands::verify(config) {
            Ok(o) => (o.text(), verify_exit(&o)),
            Err(e) => (String::new(), Err(e)),
        }
    } else {
        match commands::simulate(config) {
            Ok(s) => (s, Ok(())),
            Err(e) => (String::new(), Err(e)),
        }
    }
}

fn batch(verify: bool, jobs: usize, paths: &[PathBuf]) -> CliResult<String> {
    if jobs == 0 {
        return Err(CliError::invalid("--jobs must be at least 1"));
    }
    let configs = paths.iter().map(|p| ScenarioConfig::load(p)).collect::<CliResult<Vec<_>>>()?;
    let mut seen = HashSet::new();
    for c in &configs {
        let mut outputs = vec![c.trajectory_path(), c.diagnostics_path()];
        outputs.extend(c.output.report.clone());
        for p in outputs {
            if !seen.insert(p.clone()) {
                return Err(CliError::invalid(format!("output {} is shared by two scenarios; set distinct names", p.display())));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
    let results: Vec<(String, CliResult<()>)> = pool.install(|| configs.par_iter().map(|c| run_one(c, verify)).collect());
    let mut out = String::new();
    let mut worst: Option<CliError> = None;
    for ((text, result), c) in results.into_iter().zip(&configs) {
        out.push_str(&format!("## {}\n{text}", c.name));
        if let Err(e) = result {
            out.push_str(&format!("error {}: {e}\n", ExitKind::name(e.kind)));
            if worst.as_ref().is_none_or(|w| e.kind > w.kind) {
                worst = Some(e);
            }
        }
    }
    print!("{out}");
    match worst {
        Some(e) => Err(CliError { kind: e.kind, message: format!("batch: {}", e.message) }),
        None => Ok(String::new()),
    }
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(&args.resolve()?),
        Command::Cc(args) => commands::cc(&args),
        Command::Verify(args) => {
            let outcome = commands::verify(&args.resolve()?)?;
            print!("{}", outcome.text());
            verify_exit(&outcome).map(|_| String::new())
        }
        Command::Geometry { command } => commands::geometry(&command),
        Command::Batch { verify, jobs, configs } => batch(verify, jobs, &configs),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitKind::InvalidInput as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
