//! Command-line front end for `kyleback-core`: solves scenarios, runs Monte
//! Carlo estimates and executes the verification suites.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use kyleback_core::{presets, KyleError, ScenarioConfig};

mod commands;
pub mod report;
pub mod verify;

pub use commands::{cmd_simulate, cmd_solve, SimulateArgs, SolveArgs};
pub use report::{Check, RunReport, Status};
pub use verify::{cmd_verify, Suite, VerifyArgs};

#[derive(Debug, Parser)]
#[command(name = "kyleback", version, about = "Kyle-Back insider trading equilibria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the filter-variance equation and evaluate the objective.
    Solve {
        /// Scenario file, or the name of a built-in preset.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Terminal truncation; overrides the scenario value.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Monte Carlo simulation of the equilibrium dynamics.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Write the first K paths as CSV.
        #[arg(long, value_name = "K", default_value_t = 0)]
        dump_paths: usize,
    },
    /// Run a verification suite over the built-in presets.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value = "verify")]
        out: PathBuf,
        /// Paths per Monte Carlo check.
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Flip the sign of the quadratic Riccati term (harness self-test).
        #[arg(long, hide = true)]
        corrupt_riccati: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Riccati,
    Variational,
    Foc,
    Measure,
    Filter,
    All,
}

/// Loads a scenario from a file, falling back to the built-in presets.
pub fn load(scenario: &str) -> kyleback_core::Result<ScenarioConfig> {
    let path = std::path::Path::new(scenario);
    if path.exists() {
        return kyleback_core::load_scenario(path);
    }
    match presets::preset_text(scenario) {
        Some(_) => presets::preset(scenario),
        None => Err(KyleError::Parse(format!(
            "{scenario}: no such file or preset (presets: {})",
            presets::NAMES.join(", ")
        ))),
    }
}

/// Exit code for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &KyleError) -> i32 {
    if err.is_input_error() {
        2
    } else {
        1
    }
}

/// Runs a parsed command. Returns the report, or the error that stopped it.
pub fn run(cli: Cli) -> kyleback_core::Result<RunReport> {
    match cli.command {
        Command::Solve { scenario, out, delta } => {
            let cfg = load(&scenario)?;
            cmd_solve(&cfg, &SolveArgs { out, delta })
        }
        Command::Simulate {
            scenario,
            out,
            paths,
            seed,
            delta,
            dump_paths,
        } => {
            let cfg = load(&scenario)?;
            cmd_simulate(
                &cfg,
                &SimulateArgs {
                    out,
                    paths,
                    seed,
                    delta,
                    dump_paths,
                },
            )
        }
        Command::Verify {
            suite,
            out,
            paths,
            seed,
            corrupt_riccati,
        } => cmd_verify(&VerifyArgs {
            suite: suite.into(),
            out,
            paths,
            seed: seed.unwrap_or(0),
            corrupt_riccati,
        }),
    }
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Riccati => Suite::Riccati,
            SuiteArg::Variational => Suite::Variational,
            SuiteArg::Foc => Suite::Foc,
            SuiteArg::Measure => Suite::Measure,
            SuiteArg::Filter => Suite::Filter,
            SuiteArg::All => Suite::All,
        }
    }
}
