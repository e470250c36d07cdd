//! `geoquad` command-line front end: run scenarios, compare controllers,
//! audit basins of attraction and sweep gain grids.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geoquad::sim::{self, ControllerKind, ScenarioConfig, PRESETS};
use geoquad::SimError;

#[derive(Parser)]
#[command(name = "geoquad", version, about = "Quadrotor geometric-control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the per-step CSV log.
    Run(Common),
    /// Run a scenario against a second one (the benchmark controller by default).
    Compare {
        #[command(flatten)]
        common: Common,
        /// Scenario for the second controller; defaults to the first scenario
        /// with `controller = "benchmark"`.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Rescale the benchmark attitude gains until both RMS efforts match.
        #[arg(long)]
        match_rms: bool,
    },
    /// Evaluate basin-of-attraction certificates at every phase entry.
    Basin(Common),
    /// Evaluate certificates over the scenario's `[sweep]` gain grid.
    Sweep(Common),
    /// Print a preset as a TOML scenario file.
    Preset {
        /// One of the shipped presets.
        name: String,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file (layered over its `preset` key).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario to use when no config file is given.
    #[arg(long, default_value = "flip_full")]
    preset: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--set gains.k_x=600` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, SimError> {
        match &self.config {
            Some(path) => ScenarioConfig::load(path, &self.overrides),
            None => ScenarioConfig::preset_with(&self.preset, &self.overrides),
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, SimError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), SimError> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.scenario()?;
            let log = sim::run(&cfg)?;
            let mut w = output(common.out.as_deref())?;
            log.write_csv(&mut w)?;
            w.flush()?;
            if log.outside_l2_steps > 0 {
                eprintln!(
                    "warning: attitude error left the sublevel set Ψ < 2 on {} steps",
                    log.outside_l2_steps
                );
            }
            Ok(())
        }
        Command::Compare {
            common,
            against,
            match_rms,
        } => {
            let a = common.scenario()?;
            let b = match against {
                Some(path) => ScenarioConfig::load(&path, &common.overrides)?,
                None => ScenarioConfig {
                    controller: ControllerKind::Benchmark,
                    ..a.clone()
                },
            };
            let report = if match_rms {
                sim::compare_matched_rms(&a, &b)?
            } else {
                sim::compare(&a, &b)?
            };
            write_text(common.out.as_deref(), &report.to_toml_string()?)
        }
        Command::Basin(common) => {
            let cfg = common.scenario()?;
            let report = sim::basin_report(&cfg)?;
            write_text(common.out.as_deref(), &report.to_toml_string()?)
        }
        Command::Sweep(common) => {
            let cfg = common.scenario()?;
            let rows = sim::sweep(&cfg)?;
            let mut w = output(common.out.as_deref())?;
            sim::write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Preset { name } => {
            if !PRESETS.contains(&name.as_str()) {
                return Err(SimError::Config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )));
            }
            let cfg = ScenarioConfig::preset(&name)?;
            write_text(None, &format!("preset = {name:?}\n\n{}", cfg.to_toml_string()?))
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
