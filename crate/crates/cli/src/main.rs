use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use debt_core::sim::{run_simulation, SimConfig};
use debt_pcn::report::{self, RunSummary};
use debt_pcn::scenario::{self, DemandMode};
use debt_pcn::{builtin, output, CliError, Overrides, Result, Scenario};
use serde::Serialize;

/// Price-based routing and flow control on payment channel networks.
#[derive(Debug, Parser)]
#[command(name = "debt-pcn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trace and reset CSVs.
    Run {
        #[command(flatten)]
        target: Target,
        /// Directory for `<name>.trace.csv` and `<name>.resets.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Compare price descent against a direct solution of the primal.
    Verify {
        #[command(flatten)]
        target: Target,
    },
    /// Report the capacity and stepsize conditions.
    Check {
        #[command(flatten)]
        target: Target,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print a built-in scenario as TOML.
    EmitScenario {
        name: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Target {
    /// Scenario file, or the name of a built-in scenario.
    scenario: String,
    /// Price stepsize.
    #[arg(long)]
    gamma: Option<f64>,
    /// Regularizer weight for every pair.
    #[arg(long)]
    eta: Option<f64>,
    /// Number of slots.
    #[arg(long)]
    horizon: Option<u64>,
    /// Seed for poisson demand.
    #[arg(long)]
    seed: Option<u64>,
    /// Longest path considered, in hops.
    #[arg(long)]
    max_hops: Option<usize>,
    #[arg(long, value_enum)]
    demand_mode: Option<DemandMode>,
    /// Residual counted as balanced.
    #[arg(long)]
    stop_tol: Option<f64>,
}

impl Target {
    fn load(&self) -> Result<Scenario> {
        let (mut file, name) = scenario::resolve(&self.scenario)?;
        Overrides {
            gamma: self.gamma,
            eta: self.eta,
            horizon: self.horizon,
            seed: self.seed,
            max_hops: self.max_hops,
            demand_mode: self.demand_mode,
            stop_tol: self.stop_tol,
        }
        .apply(&mut file);
        let s = Scenario::build(&name, &file)?;
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
        Ok(s)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(io::stdout(), "{text}").map_err(|e| CliError::io("stdout", e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { target, out_dir } => {
            let s = target.load()?;
            let trace = run_simulation(
                &s.model,
                s.process.clone(),
                SimConfig {
                    gamma: s.gamma,
                    solver_tol: s.tolerance,
                },
                s.horizon,
            )?;
            let (trace_path, resets_path) = output::write_run(&out_dir, &s.name, &s.model, &trace)?;
            let mut summary = RunSummary::new(&s, &trace);
            summary.trace_file = Some(trace_path.display().to_string());
            summary.resets_file = Some(resets_path.display().to_string());
            print_json(&summary)
        }
        Command::Verify { target } => print_json(&report::verify(&target.load()?)?),
        Command::Check { target } => print_json(&report::check(&target.load()?)),
        Command::ListScenarios => {
            let mut out = io::stdout().lock();
            for name in builtin::NAMES {
                let desc = builtin::describe(name).unwrap_or_default();
                writeln!(out, "{name:<16}{desc}").map_err(|e| CliError::io("stdout", e))?;
            }
            Ok(())
        }
        Command::EmitScenario { name, out } => {
            let file = builtin::lookup(&name).ok_or_else(|| {
                CliError::Validation(format!(
                    "unknown built-in scenario {name} (built-ins: {})",
                    builtin::NAMES.join(", ")
                ))
            })?;
            let text = scenario::to_toml(&file);
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(path, e)),
                None => write!(io::stdout(), "{text}").map_err(|e| CliError::io("stdout", e)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
