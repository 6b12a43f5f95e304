//! Command-line front end.
//!
//! Exit codes: `0` success, `1` bad configuration or input, `2` numerical
//! abort.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::scenario::BUILTINS;
use super::{monte_carlo, run, MonteCarloConfig, Scenario, SimError};
use crate::analysis::Thresholds;
use crate::report::{analyze_record, MonteCarloReport};
use crate::trajectory::TrajectoryRecord;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vaa", version, about = "Velocity-aided attitude observer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory CSV.
    Run {
        /// Built-in scenario name or path to a JSON scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomised initial observer errors; writes a JSON summary.
    Montecarlo {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "paper2022-long")]
        scenario: String,
    },
    /// Analyse a trajectory CSV; writes a JSON report.
    Analyze {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario that produced the trajectory, for input-dependent metrics.
        #[arg(long)]
        scenario: Option<String>,
        /// PE window in seconds.
        #[arg(long, default_value_t = 2.0)]
        window: f64,
    },
    /// List built-in scenarios.
    Scenarios,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: e.to_string() }
}

fn sim_err(e: SimError) -> Failure {
    let code = match e {
        SimError::NonFinite { .. } | SimError::OffManifold { .. } => EXIT_NUMERIC,
        SimError::Invalid(_) => EXIT_CONFIG,
    };
    Failure { code, message: e.to_string() }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| config_err(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(config_err)?;
    writeln!(out).and_then(|_| out.flush()).map_err(config_err)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { scenario, out } => {
            let scenario = Scenario::load(&scenario).map_err(config_err)?;
            let record = run(&scenario).map_err(sim_err)?;
            let mut w = create(&out)?;
            record.write_csv(&mut w).and_then(|_| w.flush()).map_err(config_err)
        }
        Command::Montecarlo { n, seed, out, scenario } => {
            let base = Scenario::load(&scenario).map_err(config_err)?;
            let config = MonteCarloConfig::new(n, seed);
            let runs = monte_carlo(&base, &config).map_err(sim_err)?;
            write_json(&out, &MonteCarloReport::new(&base, config, runs))
        }
        Command::Analyze { traj, out, scenario, window } => {
            let file = File::open(&traj).map_err(|e| config_err(format!("cannot open {}: {e}", traj.display())))?;
            let record = TrajectoryRecord::read_csv(file).map_err(config_err)?;
            let scenario = scenario.as_deref().map(Scenario::load).transpose().map_err(config_err)?;
            let report =
                analyze_record(&record, window, scenario.as_ref(), &Thresholds::default()).map_err(config_err)?;
            write_json(&out, &report)
        }
        Command::Scenarios => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for (name, about) in BUILTINS {
                writeln!(lock, "{name:<22}{about}").map_err(config_err)?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
