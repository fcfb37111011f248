//! `crane-ctl` command set.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 usage, 3 parse or validation
//! error, 4 simulation failure. Scenario arguments are file paths, or `@name` for a
//! built-in preset (`@group1`, `@group2`, `@fixed`, `@pd`).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::harness::{self, parse_values, RunOptions, SimError, SweepAxis};
use crate::output;
use crate::scenario::{ScenarioError, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "crane-ctl", version, about = "Double-pendulum overhead crane simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long = "out", default_value = "out")]
    pub out: PathBuf,
    /// Write every N-th record to records.csv.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,
    /// Override the integrator step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Override the horizon (s).
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Reserved; the dynamics are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enable or disable fuzzy gain scheduling.
    #[arg(long, value_enum)]
    pub fuzzy: Option<Toggle>,
    /// Rule-table override file (`row col kp kd kl` per line).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Report V minus its equilibrium value.
    #[arg(long = "v-relative")]
    pub v_relative: bool,
}

/// Parsed `--values` list.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueList(pub Vec<f64>);

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario (defaults to load group 1).
    Run {
        scenario: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate several scenarios on the same plant and tabulate metrics.
    Compare {
        #[arg(required = true, num_args = 2..)]
        scenarios: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One run per value of a plant or target parameter.
    Sweep {
        /// One of m2, l2, l1, m1, x_d.
        #[arg(long, value_parser = |s: &str| s.parse::<SweepAxis>())]
        axis: SweepAxis,
        /// Comma-separated values, e.g. `1.5,2`.
        #[arg(long, value_parser = |s: &str| parse_values(s).map(ValueList))]
        values: ValueList,
        scenario: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the fully resolved scenario JSON.
    PrintConfig {
        scenario: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(ScenarioError::Io { .. }) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Simulation(SimError::Invalid(_)) => EXIT_CONFIG,
            CliError::Simulation(_) => EXIT_SIMULATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

/// Loads a scenario (file or `@preset`) and applies command-line overrides.
pub fn resolve_scenario(arg: Option<&str>, common: &CommonArgs) -> Result<ScenarioFile, CliError> {
    let mut file = match arg {
        None => ScenarioFile::default(),
        Some(name) if name.starts_with('@') => ScenarioFile::preset(&name[1..])?,
        Some(path) => ScenarioFile::load(Path::new(path))?,
    };
    if let Some(dt) = common.dt {
        file.integrator.dt = dt;
    }
    if let Some(t_end) = common.t_end {
        file.integrator.t_end = t_end;
    }
    match common.fuzzy {
        Some(Toggle::On) => file.controller.fuzzy.enabled = true,
        Some(Toggle::Off) => file.controller.fuzzy.enabled = false,
        None => {}
    }
    if let Some(table) = &common.table {
        file.controller.fuzzy.table_override_path = Some(table.clone());
    }
    file.validate()?;
    Ok(file)
}

fn run_options(common: &CommonArgs) -> RunOptions {
    RunOptions { v_relative: common.v_relative, ..Default::default() }
}

pub fn cmd_run(scenario: Option<&str>, common: &CommonArgs) -> Result<(), CliError> {
    let file = resolve_scenario(scenario, common)?;
    let sc = file.to_scenario()?;
    let result = harness::run_with(&sc, &run_options(common));
    std::fs::create_dir_all(&common.out)?;
    match result {
        Ok(out) => {
            let written = output::write_bundle(&common.out, &sc, &out, common.decimate as usize)?;
            log::info!("{}: {} records written to {}", sc.label, written, common.out.display());
            Ok(())
        }
        Err(e) => {
            let msg = format!("scenario {}: run aborted: {e}\n", sc.label);
            output::write_atomic(&common.out.join("run.log"), msg.as_bytes())?;
            Err(e.into())
        }
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_compare(scenarios: &[String], common: &CommonArgs) -> Result<(), CliError> {
    if scenarios.len() < 2 {
        return Err(CliError::Usage("compare needs at least two scenarios".into()));
    }
    let resolved = scenarios
        .iter()
        .map(|s| resolve_scenario(Some(s), common)?.to_scenario().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let (report, outputs) = harness::compare(&resolved)?;
    for (i, (sc, out)) in resolved.iter().zip(&outputs).enumerate() {
        let dir = common.out.join(format!("{:02}_{}", i + 1, sanitize(&sc.label)));
        output::write_bundle(&dir, sc, out, common.decimate as usize)?;
    }
    output::write_comparison(&common.out, &report)?;
    print!("{report}");
    Ok(())
}

pub fn cmd_sweep(
    scenario: Option<&str>,
    axis: SweepAxis,
    values: &[f64],
    common: &CommonArgs,
) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs a non-empty --values list".into()));
    }
    let sc = resolve_scenario(scenario, common)?.to_scenario()?;
    let table = harness::sweep(&sc, axis, values);
    std::fs::create_dir_all(&common.out)?;
    output::write_atomic(&common.out.join("sweep.csv"), &output::sweep_csv(&table))?;
    for row in &table.rows {
        if let Err(e) = &row.outcome {
            log::warn!("{axis} = {}: {e}", row.value);
        }
    }
    if table.succeeded() == 0 {
        let first = table.rows.iter().find_map(|r| r.outcome.clone().err());
        return Err(first.map_or_else(|| CliError::Usage("empty sweep".into()), CliError::from));
    }
    Ok(())
}

pub fn cmd_print_config(scenario: Option<&str>, common: &CommonArgs) -> Result<String, CliError> {
    let file = resolve_scenario(scenario, common)?;
    Ok(file.to_json())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { scenario, common } => cmd_run(scenario.as_deref(), common),
        Command::Compare { scenarios, common } => cmd_compare(scenarios, common),
        Command::Sweep { axis, values, scenario, common } => {
            cmd_sweep(scenario.as_deref(), *axis, &values.0, common)
        }
        Command::PrintConfig { scenario, common } => {
            println!("{}", cmd_print_config(scenario.as_deref(), common)?);
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("crane-ctl: {e}");
            e.exit_code()
        }
    }
}
